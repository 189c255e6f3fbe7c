#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "rinr/codec.hpp"
#include "rinr/comm.hpp"
#include "rinr/container.hpp"
#include "rinr/scheduler.hpp"

namespace py = pybind11;
using namespace rinr;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using Box = std::tuple<int, int, int, int>;

Image to_image(const FloatArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("expected an (H, W, 3) array");
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
    img.validate();
    return img;
}

py::array_t<float> to_array(const Image& img) {
    py::array_t<float> out({img.height, img.width, 3});
    std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
    return out;
}

BoundingBox to_box(const Box& b) { return {std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)}; }

py::bytes encode_py(const FloatArray& image, const Box& bbox, const std::string& bg_arch,
                    const std::string& obj_arch, const std::string& mode, int bg_steps, int obj_steps,
                    std::uint64_t seed, int bg_bits, int obj_bits, int threads) {
    const Image img = to_image(image);
    const BoundingBox box = to_box(bbox);
    box.validate(img.width, img.height);
    const auto bg = MlpArchitecture::parse(bg_arch);
    const auto obj = obj_arch == "auto" ? select_object_arch(box, default_object_size_table())
                                        : MlpArchitecture::parse(obj_arch);
    TrainConfig bc = default_background_config();
    bc.steps = bg_steps;
    bc.seed = seed;
    bc.threads = threads;
    TrainConfig oc = default_object_config();
    oc.steps = obj_steps;
    oc.seed = seed + 1;
    oc.threads = threads;
    EncodeResult r;
    {
        py::gil_scoped_release release;
        r = encode(img, box, bg, obj, bc, oc, parse_object_mode(mode));
    }
    const auto bytes = pack(r.encoded, QuantPolicy{bg_bits, obj_bits});
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

py::array_t<float> decode_py(const py::bytes& data, int threads) {
    const std::string_view view(data);
    const auto encoded = unpack(std::span(reinterpret_cast<const std::uint8_t*>(view.data()), view.size()));
    Image img;
    {
        py::gil_scoped_release release;
        img = decode(encoded, threads);
    }
    return to_array(img);
}

py::dict fog_plan_py(const std::vector<std::tuple<std::string, std::uint64_t, std::uint64_t>>& records,
                     double alpha) {
    std::vector<DeviceProfile> devices;
    for (const auto& [id, m, n] : records) devices.push_back({id, m, n});
    const auto plan = optimize_routes(devices, alpha);
    const auto rep = fog_total(devices, plan);
    std::vector<std::string> routes;
    for (auto r : plan.routes) routes.push_back(to_string(r));
    py::dict d;
    d["routes"] = routes;
    d["serverless_bytes"] = rep.serverless_total;
    d["fog_bytes"] = rep.fog_total;
    d["savings_bytes"] = rep.savings;
    d["ratio"] = rep.ratio;
    return d;
}

double group_latency_py(const std::vector<std::tuple<std::string, std::uint64_t>>& jobs, std::size_t batch_size,
                        std::uint64_t seed, bool grouped) {
    std::vector<DecodeJob> sim;
    for (const auto& [key, cost] : jobs) sim.push_back(make_sim_job(std::to_string(sim.size()), key, cost));
    const auto plan = grouped ? group_by_arch(sim, batch_size, seed, RemainderPolicy::Merge)
                              : ungrouped_plan(sim, batch_size, seed);
    return plan_latency(plan, sim, LatencyModel{});
}

} // namespace

PYBIND11_MODULE(_rinr, m) {
    m.doc() = "Region-aware INR image codec and fog communication planner";

    m.def("parameter_count", [](const std::string& arch) { return MlpArchitecture::parse(arch).parameter_count(); },
          py::arg("arch"), "Weights and biases of an 'LxH' network.");
    m.def("select_object_arch",
          [](const Box& bbox) { return select_object_arch(to_box(bbox), default_object_size_table()).to_string(); },
          py::arg("bbox"));
    m.def("encode", &encode_py, py::arg("image"), py::arg("bbox"), py::arg("bg_arch") = "10x30",
          py::arg("obj_arch") = "auto", py::arg("mode") = "residual", py::arg("bg_steps") = 2000,
          py::arg("obj_steps") = 1000, py::arg("seed") = 0, py::arg("bg_bits") = 8, py::arg("obj_bits") = 16,
          py::arg("threads") = 1,
          "Fit both networks to an (H, W, 3) float image in [0, 1] and return .rinr bytes.");
    m.def("decode", &decode_py, py::arg("data"), py::arg("threads") = 1, "Decode .rinr bytes to an (H, W, 3) array.");
    m.def(
        "psnr",
        [](const FloatArray& a, const FloatArray& b, std::optional<Box> bbox) {
            std::optional<BoundingBox> region;
            if (bbox) region = to_box(*bbox);
            return psnr(to_image(a), to_image(b), region);
        },
        py::arg("a"), py::arg("b"), py::arg("bbox") = py::none());
    m.def(
        "entropy", [](const FloatArray& values, int bins) {
            return entropy(std::span(values.data(), static_cast<std::size_t>(values.size())), bins);
        },
        py::arg("values"), py::arg("bins") = 256);
    m.def("route_decision", [](std::uint64_t n, double alpha) { return to_string(route_decision(n, alpha)); },
          py::arg("receivers"), py::arg("alpha"));
    m.def("fog_plan", &fog_plan_py, py::arg("devices"), py::arg("alpha"),
          "Optimal routes and totals for (id, payload_bytes, receiver_count) records.");
    m.def("group_latency", &group_latency_py, py::arg("jobs"), py::arg("batch_size"), py::arg("seed") = 0,
          py::arg("grouped") = true, "Plan latency of (arch_key, cost) jobs under the unit cost model.");
}
