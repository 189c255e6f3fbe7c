#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "cli.hpp"
#include "rinr/codec.hpp"
#include "rinr/container.hpp"
#include "rinr/image_io.hpp"

using namespace rinr;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "rinr");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("rinr_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return (path / name).string();
    }
};

Image test_scene(int side) {
    Image img(side, side);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            img.at(c, r, 0) = static_cast<float>(to_byte(0.2f + 0.5f * c / side)) / 255.0f;
            img.at(c, r, 1) = static_cast<float>(to_byte(0.3f + 0.4f * r / side)) / 255.0f;
            img.at(c, r, 2) = static_cast<float>(to_byte((c / 3 + r / 3) % 2 ? 0.8f : 0.4f)) / 255.0f;
        }
    return img;
}

// Last CSV row, split on commas.
std::vector<std::string> last_row(const std::string& text) {
    std::istringstream is(text);
    std::string line, last;
    while (std::getline(is, line))
        if (!line.empty()) last = line;
    std::vector<std::string> cells;
    std::stringstream ls(last);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    return cells;
}

std::vector<std::string> encode_args(const TempDir& dir, const std::string& input, const std::string& out) {
    return {"encode", "--input", input, "--bbox", "4,4,20,20", "--bg-arch", "3x16", "--obj-arch", "auto",
            "--mode", "residual", "--seed", "1", "--bg-steps", "40", "--obj-steps", "30", "--out", dir / out};
}

} // namespace

TEST_CASE("encode writes a container, a fit report and a summary") {
    TempDir dir;
    const auto input = dir / "scene.ppm";
    write_image(input, test_scene(28));

    const auto r = run(encode_args(dir, input, "a.rinr"));
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("object 3x10 (residual)") != std::string::npos);
    CHECK(r.out.find("object PSNR") != std::string::npos);
    CHECK(r.out.find("background PSNR") != std::string::npos);

    const auto bytes = read_file_bytes(dir / "a.rinr");
    CHECK(r.out.find(std::to_string(bytes.size()) + " bytes") != std::string::npos);
    const auto enc = unpack(bytes);
    CHECK(enc.object.arch.to_string() == "3x10");
    CHECK(enc.bbox == BoundingBox{4, 4, 20, 20});
    CHECK(bytes.size() == container_size(enc.background.arch, 8, enc.object.arch, 16));

    std::ifstream report(dir / "a.rinr.fit.csv");
    std::string header;
    std::getline(report, header);
    CHECK(header == "network,step,mse");
    int bg = 0, obj = 0;
    for (std::string line; std::getline(report, line);) {
        if (line.rfind("background,", 0) == 0) ++bg;
        if (line.rfind("object,", 0) == 0) ++obj;
    }
    CHECK(bg == 40);
    CHECK(obj == 30);

    // same seed, same bytes
    REQUIRE(run(encode_args(dir, input, "b.rinr")).code == 0);
    CHECK(read_file_bytes(dir / "b.rinr") == bytes);
}

TEST_CASE("decode matches the in-memory decode and ignores thread count") {
    TempDir dir;
    const auto input = dir / "scene.ppm";
    write_image(input, test_scene(28));
    REQUIRE(run(encode_args(dir, input, "a.rinr")).code == 0);

    REQUIRE(run({"decode", "--input", dir / "a.rinr", "--out", dir / "t1.ppm", "--threads", "1"}).code == 0);
    REQUIRE(run({"decode", "--input", dir / "a.rinr", "--out", dir / "t8.ppm", "--threads", "8"}).code == 0);
    CHECK(read_file_bytes(dir / "t1.ppm") == read_file_bytes(dir / "t8.ppm"));

    const Image expected = quantize_to_8bit(decode(unpack(read_file_bytes(dir / "a.rinr"))));
    CHECK(read_image(dir / "t1.ppm") == expected);

    if (png_supported()) {
        REQUIRE(run({"decode", "--input", dir / "a.rinr", "--out", dir / "t.png"}).code == 0);
        CHECK(read_image(dir / "t.png") == expected);
    }
}

TEST_CASE("batch decode writes every image and reports plan latency") {
    TempDir dir;
    const auto input = dir / "scene.ppm";
    write_image(input, test_scene(28));
    REQUIRE(run(encode_args(dir, input, "a.rinr")).code == 0);
    auto args = encode_args(dir, input, "b.rinr");
    args[8] = "3x8";
    REQUIRE(run(args).code == 0);
    args = encode_args(dir, input, "c.rinr");
    args[10] = "none";
    REQUIRE(run(args).code == 0);

    const auto manifest = dir.write("jobs.txt", "# containers\na.rinr\nb.rinr out_b.ppm\nc.rinr\na.rinr again.ppm\n");
    const auto r = run({"decode", "--batch", manifest, "--out-dir", dir.path.string(), "--batch-size", "2",
                        "--threads", "3"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("decoded 4 images") != std::string::npos);
    CHECK(r.out.find("plan latency") != std::string::npos);
    for (const char* name : {"a.ppm", "out_b.ppm", "c.ppm", "again.ppm"}) CHECK(fs::exists(dir.path / name));
    CHECK(read_file_bytes(dir / "a.ppm") == read_file_bytes(dir / "again.ppm"));
    CHECK(read_image(dir / "out_b.ppm") == quantize_to_8bit(decode(unpack(read_file_bytes(dir / "b.rinr")))));

    CHECK(run({"decode", "--batch", dir.write("bad.txt", "a.rinr x.ppm extra\n")}).code == 2);
    CHECK(run({"decode", "--batch", dir.write("gone.txt", "missing.rinr\n")}).code == 1);
}

TEST_CASE("encode and decode errors map to exit codes") {
    TempDir dir;
    const auto input = dir / "scene.ppm";
    write_image(input, test_scene(28));

    auto r = run({"encode", "--input", input, "--out", dir / "x.rinr"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--bbox") != std::string::npos);
    CHECK(run({"encode", "--input", input, "--bbox", "1,2,3", "--out", dir / "x.rinr"}).code == 2);
    CHECK(run({"encode", "--input", input, "--bbox", "20,20,20,20", "--out", dir / "x.rinr"}).code == 1);
    CHECK(run({"encode", "--input", input, "--bbox", "1,1,4,4", "--bg-arch", "1x5", "--out", dir / "x.rinr"})
              .code == 2);
    CHECK(run({"encode", "--input", input, "--bbox", "1,1,4,4", "--mode", "sideways", "--out", dir / "x.rinr"})
              .code == 2);
    CHECK(run({"encode", "--input", dir / "nope.ppm", "--bbox", "1,1,4,4", "--out", dir / "x.rinr"}).code == 1);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"decode", "--out", dir / "y.ppm"}).code == 2);

    r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("group-sim") != std::string::npos);
    r = run({"plan", "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--alpha") != std::string::npos);

    REQUIRE(run(encode_args(dir, input, "a.rinr")).code == 0);
    auto bytes = read_file_bytes(dir / "a.rinr");
    bytes[bytes.size() / 2] ^= 0x10;
    write_file_bytes(dir / "bad.rinr", bytes);
    r = run({"decode", "--input", dir / "bad.rinr", "--out", dir / "y.ppm"});
    CHECK(r.code == 1);
    CHECK(r.err.find("CRC") != std::string::npos);
}

TEST_CASE("eval reports full, object and background PSNR") {
    TempDir dir;
    const Image img = test_scene(16);
    write_image(dir / "a.ppm", img);
    write_image(dir / "b.ppm", img);
    auto r = run({"eval", "--raw", dir / "a.ppm", "--decoded", dir / "b.ppm", "--bbox", "2,2,5,5"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("full_psnr_db,object_psnr_db,background_psnr_db\n", 0) == 0);
    CHECK(last_row(r.out) == std::vector<std::string>{"inf", "inf", "inf"});

    // +-0.1 everywhere through 1000-level PPM files: MSE 0.01
    std::mt19937 rng(2);
    std::string raw = "P6\n8 8\n1000\n", noisy = raw;
    for (int k = 0; k < 8 * 8 * 3; ++k) {
        const int v = std::uniform_int_distribution<int>(100, 900)(rng);
        const int w = v + ((rng() & 1u) ? 100 : -100);
        for (int s : {v, w}) {
            auto& dst = s == v ? raw : noisy;
            dst.push_back(static_cast<char>(s >> 8));
            dst.push_back(static_cast<char>(s & 0xff));
        }
    }
    r = run({"eval", "--raw", dir.write("r.ppm", raw), "--decoded", dir.write("n.ppm", noisy), "--bbox",
             "1,1,3,4"});
    REQUIRE(r.code == 0);
    for (const auto& cell : last_row(r.out)) CHECK(std::stod(cell) == doctest::Approx(20.0).epsilon(1e-5));

    // object column equals PSNR of the cropped patches
    Image other = img;
    other.at(3, 3, 0) = 0.0f;
    other.at(10, 12, 2) = 1.0f;
    write_image(dir / "c.ppm", other);
    r = run({"eval", "--raw", dir / "a.ppm", "--decoded", dir / "c.ppm", "--bbox", "2,2,5,5"});
    REQUIRE(r.code == 0);
    const BoundingBox box{2, 2, 5, 5};
    const Image back = read_image(dir / "c.ppm");
    const double expected = psnr(crop(img, box), crop(back, box));
    CHECK(std::stod(last_row(r.out)[1]) == doctest::Approx(expected).epsilon(1e-5));

    CHECK(run({"eval", "--raw", dir / "a.ppm", "--decoded", dir / "b.ppm", "--bbox", "10,10,10,10"}).code == 1);
}

TEST_CASE("stats reports raw and residual entropy") {
    TempDir dir;
    write_image(dir / "flat.ppm", Image(10, 10, 0.4f));
    auto r = run({"stats", "--raw", dir / "flat.ppm", "--background", dir / "flat.ppm", "--bbox", "1,1,5,5"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("raw_entropy_bits,residual_entropy_bits\n", 0) == 0);
    CHECK(last_row(r.out) == std::vector<std::string>{"0", "0"});

    Image two(10, 10, 0.0f);
    for (int row = 0; row < 10; ++row)
        for (int col = 5; col < 10; ++col)
            for (int ch = 0; ch < 3; ++ch) two.at(col, row, ch) = 1.0f;
    write_image(dir / "two.ppm", two);
    r = run({"stats", "--raw", dir / "two.ppm", "--background", dir / "flat.ppm", "--bbox", "0,0,10,10", "--bins",
             "2"});
    REQUIRE(r.code == 0);
    CHECK(last_row(r.out)[0] == "1");
    CHECK(run({"stats", "--raw", dir / "two.ppm", "--background", dir / "flat.ppm", "--bbox", "0,0,10,10",
               "--bins", "0"})
              .code == 2);
}

TEST_CASE("plan reports routes and totals") {
    TempDir dir;
    std::string text = "# id payload receivers\n";
    for (int i = 0; i < 10; ++i) text += "cam" + std::to_string(i) + " 1000000 9\n";
    const auto devices = dir.write("devices.txt", text);

    auto r = run({"plan", "--devices", devices, "--alpha", "0.083"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    auto row = last_row(r.out);
    REQUIRE(row.size() == 12);
    CHECK(row[0] == "0.083");
    CHECK(row[2] == "10");
    CHECK(row[3] == "90000000");
    CHECK(std::abs(std::stod(row[9]) - 5.15) < 0.05);
    CHECK(row[10] == "45");
    CHECK(r.out.find("cam3,1000000,9,fog,83000,") != std::string::npos);

    r = run({"plan", "--devices", devices, "--alpha", "1.0"});
    REQUIRE(r.code == 0);
    row = last_row(r.out);
    CHECK(row[2] == "0");
    CHECK(row[8] == "0");
    CHECK(row[9] == "1");
    CHECK(r.out.find(",fog,") == std::string::npos);

    r = run({"plan", "--devices", devices, "--alpha", "0.2", "--model-bytes", "49400000", "--data-bytes",
             "200000000"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find(",training_site\n") != std::string::npos);
    CHECK(last_row(r.out).back() == "fog");

    const auto bad = dir.write("bad.txt", "a 10 2\nb 20 3\nc twelve 4\n");
    r = run({"plan", "--devices", bad, "--alpha", "0.5"});
    CHECK(r.code == 2);
    CHECK(r.err.find("bad.txt:3:") != std::string::npos);
    CHECK(run({"plan", "--devices", dir.write("short.txt", "a 10\n"), "--alpha", "0.5"}).code == 2);
    CHECK(run({"plan", "--devices", devices, "--alpha", "0"}).code == 2);
    CHECK(run({"plan", "--devices", devices, "--alpha", "0.5", "--model-bytes", "5"}).code == 2);
    CHECK(run({"plan", "--devices", dir / "missing.txt", "--alpha", "0.5"}).code == 1);
}

TEST_CASE("group-sim compares grouped and ungrouped plans") {
    TempDir dir;
    auto r = run({"group-sim", "--manifest", dir.write("m.txt", "s 1\nl 4\ns 1\nl 4\n"), "--batch-size", "2"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("jobs,batch_size,batches,grouped_latency,ungrouped_worst,ungrouped_mean,ratio\n", 0) == 0);
    auto row = last_row(r.out);
    CHECK(row[3] == "5");
    CHECK(row[4] == "8");
    CHECK(row[6] == "1.6");

    r = run({"group-sim", "--manifest", dir.write("one.txt", "3x8\n3x8\n3x8\n"), "--batch-size", "2"});
    REQUIRE(r.code == 0);
    CHECK(last_row(r.out)[6] == "1");

    // costs derived from parameter counts: 3x10 = 173, 10x30/3x15 = 7623 + 333
    r = run({"group-sim", "--manifest", dir.write("arch.txt", "3x10\n10x30/3x15\n"), "--batch-size", "1"});
    REQUIRE(r.code == 0);
    CHECK(last_row(r.out)[3] == std::to_string(173 + 7623 + 333));

    CHECK(run({"group-sim", "--manifest", dir.write("bad.txt", "s 1 2\n")}).code == 2);
    CHECK(run({"group-sim", "--manifest", dir.write("empty.txt", "# nothing\n")}).code == 2);
    CHECK(run({"group-sim", "--manifest", dir.write("ok.txt", "s 1\n"), "--remainder", "odd"}).code == 2);
}

TEST_CASE("the installed binary reports usage errors with exit code 2") {
    const std::string cmd = std::string(RINR_TOOL_PATH) + " encode --input x.ppm --out y.rinr > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 2);
}
