#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "rinr/codec.hpp"
#include "rinr/comm.hpp"
#include "rinr/container.hpp"
#include "rinr/error.hpp"
#include "rinr/image_io.hpp"
#include "rinr/scheduler.hpp"

namespace rinr::cli {

namespace {

namespace fs = std::filesystem;

// Malformed user input (flags, records, manifests); maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

int default_threads() {
    if (const char* env = std::getenv("RINR_THREADS")) {
        int v = 0;
        const std::string_view s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && ptr == s.data() + s.size() && v >= 1) return v;
    }
    return 1;
}

template <class T>
T parse_number(std::string_view text, const std::string& what) {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw UsageError("invalid " + what + " '" + std::string(text) + "'");
    return v;
}

std::vector<std::string> split(std::string_view text, std::string_view seps) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto next = text.find_first_of(seps, pos);
        const auto end = next == std::string_view::npos ? text.size() : next;
        out.emplace_back(text.substr(pos, end - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

// Whitespace- or comma-separated fields of one record line; comments start with '#'.
std::vector<std::string> record_fields(std::string line) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream is(line);
    std::vector<std::string> fields;
    for (std::string f; is >> f;) fields.push_back(f);
    return fields;
}

BoundingBox parse_bbox(const std::string& text) {
    const auto parts = split(text, ",");
    if (parts.size() != 4) throw UsageError("--bbox expects x,y,w,h, got '" + text + "'");
    BoundingBox b{parse_number<int>(parts[0], "bbox x"), parse_number<int>(parts[1], "bbox y"),
                  parse_number<int>(parts[2], "bbox width"), parse_number<int>(parts[3], "bbox height")};
    if (b.x < 0 || b.y < 0 || b.w < 1 || b.h < 1) throw UsageError("--bbox values out of range: '" + text + "'");
    return b;
}

MlpArchitecture parse_arch(const std::string& text, float omega) {
    try {
        auto a = MlpArchitecture::parse(text);
        a.frequency_scale = omega;
        a.validate();
        return a;
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

ObjectMode parse_mode(const std::string& text) {
    try {
        return parse_object_mode(text);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
    std::string input, bbox, bg_arch = "10x30", obj_arch = "auto", mode = "residual", out, report,
        dataset = "DAC-SDC";
    std::uint64_t seed = 0;
    int bg_steps = default_background_config().steps;
    int obj_steps = default_object_config().steps;
    double bg_lr = default_background_config().learning_rate;
    double obj_lr = default_object_config().learning_rate;
    float omega = 30.0f;
    int bg_bits = 8, obj_bits = 16;
    int threads = default_threads();
};

int cmd_encode(const EncodeArgs& a, std::ostream& out) {
    const Image image = read_image(a.input);
    const BoundingBox box = parse_bbox(a.bbox);
    box.validate(image.width, image.height);
    const ObjectMode mode = parse_mode(a.mode);
    const auto bg_arch = parse_arch(a.bg_arch, a.omega);
    MlpArchitecture obj_arch;
    if (a.obj_arch == "auto") {
        const DatasetConfig* cfg = nullptr;
        try {
            cfg = &dataset_config(a.dataset);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        obj_arch = select_object_arch(box, object_size_table(*cfg));
        obj_arch.frequency_scale = a.omega;
    } else {
        obj_arch = parse_arch(a.obj_arch, a.omega);
    }

    TrainConfig bg_cfg = default_background_config();
    bg_cfg.steps = a.bg_steps;
    bg_cfg.learning_rate = a.bg_lr;
    bg_cfg.seed = a.seed;
    bg_cfg.threads = a.threads;
    TrainConfig obj_cfg = default_object_config();
    obj_cfg.steps = a.obj_steps;
    obj_cfg.learning_rate = a.obj_lr;
    obj_cfg.seed = a.seed + 1;
    obj_cfg.threads = a.threads;
    try {
        bg_cfg.validate();
        obj_cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const auto result = encode(image, box, bg_arch, obj_arch, bg_cfg, obj_cfg, mode);
    const auto bytes = pack(result.encoded, QuantPolicy{a.bg_bits, a.obj_bits});
    write_file_bytes(a.out, bytes);

    const std::string report_path = a.report.empty() ? a.out + ".fit.csv" : a.report;
    std::ofstream rep(report_path);
    if (!rep) throw std::runtime_error("cannot write fit report " + report_path);
    rep << "network,step,mse\n";
    auto dump = [&](const char* name, const FitReport& r) {
        for (std::size_t i = 0; i < r.loss_trace.size(); ++i)
            rep << name << ',' << i + 1 << ',' << num(r.loss_trace[i]) << '\n';
    };
    dump("background", result.background_report);
    if (mode != ObjectMode::None) dump("object", result.object_report);

    const Image decoded = decode(unpack(bytes), a.threads);
    out << "encoded " << a.out << ": " << bytes.size() << " bytes, background " << bg_arch.to_string()
        << ", object " << (mode == ObjectMode::None ? std::string("-") : obj_arch.to_string()) << " ("
        << to_string(mode) << "), object PSNR " << num(psnr(decoded, image, box)) << " dB, background PSNR "
        << num(psnr_outside(decoded, image, box)) << " dB\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct DecodeArgs {
    std::string input, out, batch, out_dir = ".";
    int threads = default_threads();
    std::size_t batch_size = 4;
    std::uint64_t seed = 0;
};

int cmd_decode(const DecodeArgs& a, std::ostream& out) {
    if (a.batch.empty()) {
        if (a.input.empty() || a.out.empty()) throw UsageError("decode needs --input and --out (or --batch)");
        const auto encoded = unpack(read_file_bytes(a.input));
        write_image(a.out, decode(encoded, a.threads));
        out << "decoded " << a.input << " -> " << a.out << '\n';
        return kExitOk;
    }

    // Read every container up front; decoding then touches memory only.
    std::ifstream manifest(a.batch);
    if (!manifest) throw std::runtime_error("cannot open manifest " + a.batch);
    const fs::path base = fs::path(a.batch).parent_path();
    std::vector<DecodeJob> jobs;
    std::vector<fs::path> outputs;
    std::string line;
    for (int lineno = 1; std::getline(manifest, line); ++lineno) {
        const auto f = record_fields(line);
        if (f.empty()) continue;
        if (f.size() > 2)
            throw UsageError(a.batch + ":" + std::to_string(lineno) + ": expected '<input.rinr> [output]'");
        fs::path in = f[0];
        if (in.is_relative()) in = base / in;
        fs::path dst = f.size() == 2 ? fs::path(f[1]) : fs::path(a.out_dir) / (in.stem().string() + ".ppm");
        if (f.size() == 2 && dst.is_relative()) dst = base / dst;
        auto encoded = std::make_shared<const EncodedImage>(unpack(read_file_bytes(in)));
        jobs.push_back(make_decode_job(in.string(), std::move(encoded)));
        outputs.push_back(dst);
    }

    const LatencyModel model;
    const auto plan = group_by_arch(jobs, a.batch_size, a.seed, RemainderPolicy::Merge);
    const auto baseline = ungrouped_plan(jobs, a.batch_size, a.seed);
    for (const auto& batch : plan.batches) {
        std::vector<DecodeJob> members;
        for (auto i : batch) members.push_back(jobs[i]);
        const auto images = decode_batch(members, a.threads);
        for (std::size_t k = 0; k < batch.size(); ++k) write_image(outputs[batch[k]], images[k]);
    }
    out << "decoded " << jobs.size() << " images in " << plan.batches.size() << " batches\n";
    if (!jobs.empty())
        out << "plan latency (parameter-count proxy): grouped " << num(plan_latency(plan, jobs, model))
            << ", ungrouped " << num(plan_latency(baseline, jobs, model)) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string raw, decoded, bbox;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const Image raw = read_image(a.raw);
    const Image dec = read_image(a.decoded);
    const BoundingBox box = parse_bbox(a.bbox);
    box.validate(raw.width, raw.height);
    out << "full_psnr_db,object_psnr_db,background_psnr_db\n"
        << num(psnr(raw, dec)) << ',' << num(psnr(raw, dec, box)) << ',' << num(psnr_outside(raw, dec, box))
        << '\n';
    return kExitOk;
}

struct StatsArgs {
    std::string raw, background, bbox;
    int bins = 256;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
    const Image raw = read_image(a.raw);
    const Image bg = read_image(a.background);
    const BoundingBox box = parse_bbox(a.bbox);
    box.validate(raw.width, raw.height);
    if (a.bins < 1) throw UsageError("--bins must be >= 1");
    const Image raw_patch = crop(raw, box);
    const auto residual = compute_residual(raw_patch, crop(bg, box));
    out << "raw_entropy_bits,residual_entropy_bits\n"
        << num(entropy(raw_patch.pixels, a.bins)) << ',' << num(entropy(residual.stored, a.bins)) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

std::vector<DeviceProfile> read_devices(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open device file " + path);
    std::vector<DeviceProfile> devices;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const auto f = record_fields(line);
        if (f.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno) + ": ";
        if (f.size() != 3)
            throw UsageError(where + "expected '<id> <payload_bytes> <receiver_count>'");
        try {
            devices.push_back({f[0], parse_number<std::uint64_t>(f[1], "payload_bytes"),
                               parse_number<std::uint64_t>(f[2], "receiver_count")});
        } catch (const UsageError& e) {
            throw UsageError(where + e.what());
        }
    }
    return devices;
}

struct PlanArgs {
    std::string devices;
    double alpha = 0.0;
    std::optional<std::uint64_t> model_bytes, data_bytes;
    double bandwidth = kDefaultBandwidth;
};

int cmd_plan(const PlanArgs& a, std::ostream& out) {
    try {
        validate_alpha(a.alpha);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!(a.bandwidth > 0.0)) throw UsageError("--bandwidth must be positive");
    if (a.model_bytes.has_value() != a.data_bytes.has_value())
        throw UsageError("--model-bytes and --data-bytes must be given together");

    const auto devices = read_devices(a.devices);
    const auto plan = optimize_routes(devices, a.alpha, a.bandwidth);
    const auto rep = fog_total(devices, plan);

    out << "device,payload_bytes,receivers,route,compressed_bytes,marginal_saving_bytes\n";
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const auto& d = devices[i];
        const auto& c = rep.devices[i];
        out << d.id << ',' << d.payload_bytes << ',' << d.receiver_count << ',' << to_string(c.route) << ','
            << c.compressed_bytes << ',' << c.marginal_saving << '\n';
    }
    out << '\n';
    out << "alpha,devices,fog_devices,serverless_bytes,fog_bytes,m1_bytes,m2_bytes,m3_bytes,savings_bytes,"
           "ratio,serverless_time_s,fog_time_s";
    if (a.model_bytes) out << ",training_site";
    out << '\n';
    out << num(a.alpha) << ',' << devices.size() << ',' << plan.fog_count() << ',' << rep.serverless_total << ','
        << rep.fog_total << ',' << rep.fog_broadcast << ',' << rep.fog_upload << ',' << rep.direct << ','
        << rep.savings << ',' << num(rep.ratio) << ',' << num(transfer_time(rep.serverless_total, plan)) << ','
        << num(transfer_time(rep.fog_total, plan));
    if (a.model_bytes) out << ',' << to_string(training_location(*a.data_bytes, *a.model_bytes));
    out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

std::vector<DecodeJob> read_sim_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path);
    std::vector<DecodeJob> jobs;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const auto f = record_fields(line);
        if (f.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno) + ": ";
        if (f.size() > 2) throw UsageError(where + "expected '<arch_key> [cost]'");
        std::uint64_t cost = 0;
        try {
            if (f.size() == 2) {
                cost = parse_number<std::uint64_t>(f[1], "cost");
            } else {
                // Cost from "BGxH/OBJxH" or "LxH" parameter counts.
                for (const auto& part : split(f[0], "/")) cost += MlpArchitecture::parse(part).parameter_count();
            }
            jobs.push_back(make_sim_job(std::to_string(jobs.size()), f[0], cost));
        } catch (const std::invalid_argument& e) {
            throw UsageError(where + e.what());
        } catch (const UsageError& e) {
            throw UsageError(where + e.what());
        }
    }
    return jobs;
}

struct GroupSimArgs {
    std::string manifest, remainder = "merge";
    std::size_t batch_size = 2;
    std::uint64_t seed = 0;
    double latency_fixed = 0.0, latency_per_cost = 1.0;
};

int cmd_group_sim(const GroupSimArgs& a, std::ostream& out) {
    if (a.batch_size < 1) throw UsageError("--batch-size must be >= 1");
    RemainderPolicy policy;
    if (a.remainder == "merge")
        policy = RemainderPolicy::Merge;
    else if (a.remainder == "undersized")
        policy = RemainderPolicy::Undersized;
    else
        throw UsageError("--remainder must be 'merge' or 'undersized'");
    const LatencyModel model{a.latency_fixed, a.latency_per_cost};
    try {
        model.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const auto jobs = read_sim_manifest(a.manifest);
    if (jobs.empty()) throw UsageError(a.manifest + ": no jobs");
    const auto grouped = group_by_arch(jobs, a.batch_size, a.seed, policy);
    const double grouped_latency = plan_latency(grouped, jobs, model);

    // Ungrouped: every job order for small manifests, seeded samples otherwise.
    double worst = 0.0, total = 0.0;
    std::size_t plans = 0;
    std::vector<std::size_t> order(jobs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto visit = [&](const std::vector<std::size_t>& o) {
        const double t = plan_latency(plan_from_order(o, a.batch_size), jobs, model);
        worst = std::max(worst, t);
        total += t;
        ++plans;
    };
    if (jobs.size() <= 8) {
        do visit(order);
        while (std::next_permutation(order.begin(), order.end()));
    } else {
        for (std::uint64_t s = 0; s < 1000; ++s) {
            const auto p = ungrouped_plan(jobs, a.batch_size, a.seed + s);
            const double t = plan_latency(p, jobs, model);
            worst = std::max(worst, t);
            total += t;
            ++plans;
        }
    }
    const double mean = total / static_cast<double>(plans);
    out << "jobs,batch_size,batches,grouped_latency,ungrouped_worst,ungrouped_mean,ratio\n"
        << jobs.size() << ',' << a.batch_size << ',' << grouped.batches.size() << ',' << num(grouped_latency) << ','
        << num(worst) << ',' << num(mean) << ',' << num(worst / grouped_latency) << '\n';
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Region-aware INR image codec and fog communication planner", "rinr"};
    app.require_subcommand(1);

    EncodeArgs enc;
    auto* sc_encode = app.add_subcommand("encode", "Encode an image into a .rinr container");
    sc_encode->add_option("--input", enc.input, "Input image (PPM P6 or PNG)")->required();
    sc_encode->add_option("--bbox", enc.bbox, "Object box x,y,w,h")->required();
    sc_encode->add_option("--bg-arch", enc.bg_arch, "Background network LxH")->capture_default_str();
    sc_encode->add_option("--obj-arch", enc.obj_arch, "Object network LxH or 'auto'")->capture_default_str();
    sc_encode->add_option("--dataset", enc.dataset, "Size table used by --obj-arch auto")->capture_default_str();
    sc_encode->add_option("--mode", enc.mode, "residual, direct or none")->capture_default_str();
    sc_encode->add_option("--seed", enc.seed)->capture_default_str();
    sc_encode->add_option("--out", enc.out, "Output .rinr path")->required();
    sc_encode->add_option("--report", enc.report, "Fit report CSV (default <out>.fit.csv)");
    sc_encode->add_option("--bg-steps", enc.bg_steps)->capture_default_str();
    sc_encode->add_option("--obj-steps", enc.obj_steps)->capture_default_str();
    sc_encode->add_option("--bg-lr", enc.bg_lr)->capture_default_str();
    sc_encode->add_option("--obj-lr", enc.obj_lr)->capture_default_str();
    sc_encode->add_option("--omega", enc.omega, "Sinusoid frequency scale")->capture_default_str();
    sc_encode->add_option("--bg-bits", enc.bg_bits)->check(CLI::IsMember({8, 16}))->capture_default_str();
    sc_encode->add_option("--obj-bits", enc.obj_bits)->check(CLI::IsMember({8, 16}))->capture_default_str();
    sc_encode->add_option("--threads", enc.threads)->check(CLI::PositiveNumber);

    DecodeArgs dec;
    auto* sc_decode = app.add_subcommand("decode", "Decode .rinr containers to images");
    sc_decode->add_option("--input", dec.input, "Input .rinr");
    sc_decode->add_option("--out", dec.out, "Output image (.ppm or .png)");
    sc_decode->add_option("--batch", dec.batch, "Manifest of containers to decode as a batch");
    sc_decode->add_option("--out-dir", dec.out_dir, "Output directory for batch mode")->capture_default_str();
    sc_decode->add_option("--batch-size", dec.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    sc_decode->add_option("--seed", dec.seed)->capture_default_str();
    sc_decode->add_option("--threads", dec.threads)->check(CLI::PositiveNumber);

    EvalArgs ev;
    auto* sc_eval = app.add_subcommand("eval", "PSNR of a decoded image against the original");
    sc_eval->add_option("--raw", ev.raw)->required();
    sc_eval->add_option("--decoded", ev.decoded)->required();
    sc_eval->add_option("--bbox", ev.bbox)->required();

    StatsArgs st;
    auto* sc_stats = app.add_subcommand("stats", "Entropy of raw object values vs stored residuals");
    sc_stats->add_option("--raw", st.raw)->required();
    sc_stats->add_option("--background", st.background, "Background-only decode")->required();
    sc_stats->add_option("--bbox", st.bbox)->required();
    sc_stats->add_option("--bins", st.bins)->capture_default_str();

    PlanArgs pl;
    auto* sc_plan = app.add_subcommand("plan", "Fog vs serverless communication plan");
    sc_plan->add_option("--devices", pl.devices, "Device records file")->required();
    sc_plan->add_option("--alpha", pl.alpha, "Compressed size / JPEG size")->required();
    sc_plan->add_option("--model-bytes", pl.model_bytes, "Model transfer size in bytes");
    sc_plan->add_option("--data-bytes", pl.data_bytes, "Training data size in bytes");
    sc_plan->add_option("--bandwidth", pl.bandwidth, "Bytes per second")->capture_default_str();

    GroupSimArgs gs;
    auto* sc_group = app.add_subcommand("group-sim", "Grouped vs ungrouped batch decode latency");
    sc_group->add_option("--manifest", gs.manifest, "Lines of '<arch_key> [cost]'")->required();
    sc_group->add_option("--batch-size", gs.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    sc_group->add_option("--seed", gs.seed)->capture_default_str();
    sc_group->add_option("--remainder", gs.remainder, "merge or undersized")->capture_default_str();
    sc_group->add_option("--latency-fixed", gs.latency_fixed)->capture_default_str();
    sc_group->add_option("--latency-per-cost", gs.latency_per_cost)->capture_default_str();

    std::vector<char*> argv;
    std::vector<std::string> storage(args);
    if (storage.empty()) storage.emplace_back("rinr");
    for (auto& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "rinr: " << e.what() << '\n' << "run 'rinr --help' for usage\n";
        return kExitUsage;
    }

    try {
        if (sc_encode->parsed()) return cmd_encode(enc, out);
        if (sc_decode->parsed()) return cmd_decode(dec, out);
        if (sc_eval->parsed()) return cmd_eval(ev, out);
        if (sc_stats->parsed()) return cmd_stats(st, out);
        if (sc_plan->parsed()) return cmd_plan(pl, out);
        if (sc_group->parsed()) return cmd_group_sim(gs, out);
    } catch (const UsageError& e) {
        err << "rinr: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "rinr: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace rinr::cli
