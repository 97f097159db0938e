// Command-line surface for the denoising engines, quality metrics, and the
// pipeline simulator.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bgrid/bilateral.hpp"
#include "bgrid/grid.hpp"
#include "bgrid/image.hpp"
#include "bgrid/metrics.hpp"
#include "bgrid/report_json.hpp"
#include "bgrid/streaming.hpp"

namespace {

struct RunConfig {
    std::string engine = "streaming";
    std::string mode = "float";
    std::string ti_weights = "standard";
    int shift_bits = 8;
    bgrid::DenoiseParams params;
    std::string in_path, out_path, b_path;
    double sigma = 30.0;
    std::uint64_t seed = 1;
    std::vector<double> f_clk;
    std::vector<int> radii;
    double noise_sigma = 30.0;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bgrid::Image read_image(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ValidationError("input file not found: " + path);
    return bgrid::load_pgm_file(path);
}

std::optional<bgrid::ShiftKernel> make_mode(const RunConfig& cfg) {
    if (cfg.mode == "float") return std::nullopt;
    if (cfg.mode == "shift")
        return bgrid::quantize_kernel_pow2(cfg.params.sigma_g(), cfg.shift_bits);
    throw ValidationError("mode must be float or shift");
}

bgrid::TiWeights make_weights(const RunConfig& cfg) {
    if (cfg.ti_weights == "standard") return bgrid::TiWeights::standard;
    if (cfg.ti_weights == "paper-literal") return bgrid::TiWeights::paper_literal;
    throw ValidationError("ti-weights must be standard or paper-literal");
}

void check_params(const bgrid::DenoiseParams& p) {
    p.validate();  // throws invalid_argument naming the flag
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

int run_denoise(const RunConfig& cfg) {
    check_params(cfg.params);
    bgrid::Image img = read_image(cfg.in_path);
    auto mode = make_mode(cfg);
    auto tw = make_weights(cfg);
    bgrid::Image out;
    if (cfg.engine == "reference") {
        out = bgrid::bg_denoise(img, cfg.params, mode, tw);
    } else if (cfg.engine == "streaming") {
        bgrid::StreamOptions opt;
        opt.ti_weights = tw;
        out = bgrid::run_streaming(img, cfg.params, mode, opt).first;
    } else if (cfg.engine == "bf") {
        out = bgrid::bilateral_filter(img, cfg.params);
    } else {
        throw ValidationError("engine must be reference, streaming, or bf");
    }
    bgrid::save_pgm_file(out, cfg.out_path);
    return 0;
}

int run_noise(const RunConfig& cfg) {
    if (cfg.sigma < 0) throw ValidationError("sigma must be >= 0");
    bgrid::Image img = read_image(cfg.in_path);
    bgrid::save_pgm_file(bgrid::add_gaussian_noise(img, cfg.sigma, cfg.seed), cfg.out_path);
    return 0;
}

int run_mssim(const RunConfig& cfg) {
    double v = bgrid::mssim(read_image(cfg.in_path), read_image(cfg.b_path));
    std::printf("%.6f\n", v);
    return 0;
}

int run_psnr(const RunConfig& cfg) {
    double v = bgrid::psnr(read_image(cfg.in_path), read_image(cfg.b_path));
    if (std::isinf(v))
        std::printf("inf\n");
    else
        std::printf("%.6f\n", v);
    return 0;
}

int run_simulate(const RunConfig& cfg) {
    check_params(cfg.params);
    bgrid::Image img = read_image(cfg.in_path);
    bgrid::StreamOptions opt;
    opt.ti_weights = make_weights(cfg);
    auto [out, rep] = bgrid::run_streaming(img, cfg.params, make_mode(cfg), opt);
    std::vector<double> clks = cfg.f_clk.empty() ? std::vector<double>{150e6} : cfg.f_clk;
    std::cout << bgrid::report_to_json(rep, clks).dump(2) << "\n";
    return bgrid::audit_memory_accesses(rep).passed ? 0 : 1;
}

int run_bench(const RunConfig& cfg) {
    if (cfg.radii.empty()) throw ValidationError("radii list must not be empty");
    bgrid::Image orig = read_image(cfg.in_path);
    bgrid::Image input = cfg.noise_sigma > 0.0
                             ? bgrid::add_gaussian_noise(orig, cfg.noise_sigma, cfg.seed)
                             : orig;
    std::vector<int> radii = cfg.radii;
    std::sort(radii.begin(), radii.end());
    std::printf("r,engine,wall_time_ms,cycles,stalls,mssim_vs_original\n");
    for (int r : radii) {
        bgrid::DenoiseParams p = cfg.params;
        p.radius = r;
        check_params(p);
        RunConfig sweep = cfg;
        sweep.params = p;
        auto mode = make_mode(sweep);
        for (const char* engine : {"reference", "streaming"}) {
            auto t0 = std::chrono::steady_clock::now();
            bgrid::Image out;
            std::string cycles, stalls;
            if (engine == std::string("reference")) {
                out = bgrid::bg_denoise(input, p, mode);
            } else {
                auto [o, rep] = bgrid::run_streaming(input, p, mode);
                out = std::move(o);
                if (!rep.fallback) {
                    cycles = std::to_string(rep.total_cycles);
                    stalls = std::to_string(rep.stall_cycles);
                }
            }
            double ms = elapsed_ms(t0);
            std::printf("%d,%s,%.3f,%s,%s,%.6f\n", r, engine, ms, cycles.c_str(), stalls.c_str(),
                        bgrid::mssim(out, orig));
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bilateral-grid denoiser, metrics, and pipeline simulator"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_params = [&](CLI::App* sub) {
        sub->add_option("--radius", cfg.params.radius, "window radius r (>= 1)")->required();
        sub->add_option("--sigma-s", cfg.params.sigma_s, "spatial standard deviation")->required();
        sub->add_option("--sigma-r", cfg.params.sigma_r, "range standard deviation")->required();
    };
    auto add_mode = [&](CLI::App* sub) {
        sub->add_option("--mode", cfg.mode, "arithmetic mode: float | shift (default float)");
        sub->add_option("--shift-bits", cfg.shift_bits, "shift-mode weight budget (default 8)");
        sub->add_option("--ti-weights", cfg.ti_weights,
                        "interpolation weights: standard | paper-literal (default standard)");
    };

    CLI::App* denoise = app.add_subcommand("denoise", "filter a PGM image");
    denoise->add_option("--in", cfg.in_path, "input PGM")->required();
    denoise->add_option("--out", cfg.out_path, "output PGM")->required();
    add_params(denoise);
    add_mode(denoise);
    denoise->add_option("--engine", cfg.engine,
                        "engine: streaming | reference | bf (default streaming)");

    CLI::App* noise = app.add_subcommand("noise", "add seeded Gaussian noise");
    noise->add_option("--in", cfg.in_path, "input PGM")->required();
    noise->add_option("--out", cfg.out_path, "output PGM")->required();
    noise->add_option("--sigma", cfg.sigma, "noise standard deviation (default 30)");
    noise->add_option("--seed", cfg.seed, "generator seed (default 1)");

    CLI::App* cmssim = app.add_subcommand("mssim", "mean SSIM between two images");
    cmssim->add_option("a", cfg.in_path, "first PGM")->required();
    cmssim->add_option("b", cfg.b_path, "second PGM")->required();

    CLI::App* cpsnr = app.add_subcommand("psnr", "PSNR between two images");
    cpsnr->add_option("a", cfg.in_path, "first PGM")->required();
    cpsnr->add_option("b", cfg.b_path, "second PGM")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "run the pipeline model, print JSON");
    simulate->add_option("--in", cfg.in_path, "input PGM")->required();
    add_params(simulate);
    add_mode(simulate);
    simulate->add_option("--f-clk", cfg.f_clk, "clock frequencies for fps prediction (Hz)");

    CLI::App* bench = app.add_subcommand("bench", "radius sweep, CSV on stdout");
    bench->add_option("--in", cfg.in_path, "input PGM (treated as the clean original)")
        ->required();
    bench->add_option("--radii", cfg.radii, "radii to sweep")->required()->delimiter(',');
    bench->add_option("--sigma-s", cfg.params.sigma_s, "spatial standard deviation")->required();
    bench->add_option("--sigma-r", cfg.params.sigma_r, "range standard deviation")->required();
    bench->add_option("--noise-sigma", cfg.noise_sigma,
                      "noise added before denoising (default 30; 0 disables)");
    bench->add_option("--seed", cfg.seed, "noise seed (default 1)");
    bench->add_option("--mode", cfg.mode, "arithmetic mode: float | shift");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (denoise->parsed()) return run_denoise(cfg);
        if (noise->parsed()) return run_noise(cfg);
        if (cmssim->parsed()) return run_mssim(cfg);
        if (cpsnr->parsed()) return run_psnr(cfg);
        if (simulate->parsed()) return run_simulate(cfg);
        if (bench->parsed()) return run_bench(cfg);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
