#pragma once

// Command-line front end: `run`, `generate` and `metrics` subcommands.
//
//   run       sampler + optional random baseline, writes snapshot masks and
//             sampled images, metrics.csv, timing.csv and manifest.json
//   generate  writes a synthetic dendrite PGM
//   metrics   prints "ratio,psnr_db,ssim" for a truth image and a mask

#include "uslads/dendrite.hpp"
#include "uslads/image.hpp"
#include "uslads/log.hpp"
#include "uslads/metrics.hpp"
#include "uslads/pgm.hpp"
#include "uslads/sampler.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace uslads::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Shortest round-trip decimal; integral values keep a ".0", infinity is "inf".
inline std::string format_number(double v)
{
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  if (std::isnan(v))
    return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos)
    s += ".0";
  return s;
}

struct Size
{
  std::size_t width = 0;
  std::size_t height = 0;
};

/// Parses "WxH".
inline std::optional<Size> parse_size(const std::string& text)
{
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos || x == 0 || x + 1 >= text.size())
    return std::nullopt;
  Size s;
  const char* b = text.data();
  auto r1 = std::from_chars(b, b + x, s.width);
  auto r2 = std::from_chars(b + x + 1, b + text.size(), s.height);
  if (r1.ec != std::errc{} || r1.ptr != b + x || r2.ec != std::errc{} || r2.ptr != b + text.size())
    return std::nullopt;
  return s;
}

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct RunOptions
{
  std::string input;
  std::string generate;
  int arms = 4;
  double secondary_rate = 0.1;
  double thickness = 2.0;
  std::uint64_t seed = 7;
  double initial_ratio = 0.05;
  double stop_ratio = 0.40;
  std::size_t maxiter = 10;
  std::size_t epsilon = 10;
  std::size_t max_clusters = 10;
  double snapshot_every = 0.05;
  double image_every = 0.10;
  std::string out = "uslads_out";
  std::string baseline = "random";
};

struct GenerateOptions
{
  std::string size;
  int arms = 4;
  double secondary_rate = 0.1;
  double thickness = 2.0;
  std::uint64_t seed = 7;
  std::string output;
};

struct MetricsOptions
{
  std::string truth;
  std::string mask;
};

inline DendriteParams dendrite_params(const std::string& size_text, int arms, double rate, double thickness,
                                      std::uint64_t seed)
{
  const auto size = parse_size(size_text);
  if (!size)
    throw UsageError("size must look like WIDTHxHEIGHT, got '" + size_text + "'");
  DendriteParams p;
  p.width = size->width;
  p.height = size->height;
  p.primary_arms = arms;
  p.secondary_rate = rate;
  p.thickness = thickness;
  p.seed = seed;
  if (p.width < 32 || p.height < 32)
    throw UsageError("generated images must be at least 32x32");
  if (p.primary_arms < 1)
    throw UsageError("--arms must be at least 1");
  if (!(p.thickness > 0.0) || !(p.secondary_rate >= 0.0))
    throw UsageError("--thickness must be positive and --secondary-rate non-negative");
  return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw ImageError(ImageErrorCode::io_failure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out)
    throw ImageError(ImageErrorCode::io_failure, "write failed for " + path.string());
}

// True when `ratio` is (numerically) a positive multiple of `step`.
inline bool on_grid(double ratio, double step)
{
  const double q = ratio / step;
  return std::abs(q - std::round(q)) < 1e-6 && std::round(q) >= 1.0;
}

inline std::string snapshot_name(const std::string& method, int percent, const char* kind)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%02d_%s.pgm", method.c_str(), percent, kind);
  return buf;
}

inline int cmd_run(const RunOptions& o)
{
  if (o.input.empty() == o.generate.empty())
    throw UsageError("exactly one of --input or --generate is required");
  if (o.baseline != "random" && o.baseline != "none")
    throw UsageError("--baseline must be 'random' or 'none'");
  if (!(o.image_every > 0.0 && o.image_every <= 1.0))
    throw UsageError("--image-every must lie in (0, 1]");

  SamplerConfig cfg;
  cfg.stop_ratio = o.stop_ratio;
  cfg.initial_ratio = o.initial_ratio;
  cfg.maxiter = o.maxiter;
  cfg.epsilon = o.epsilon;
  cfg.n_max = o.max_clusters;
  cfg.seed = o.seed;
  cfg.snapshot_every = o.snapshot_every;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const std::filesystem::path out_dir(o.out);
  nlohmann::json manifest;
  Image truth;
  if (!o.generate.empty()) {
    const auto p = dendrite_params(o.generate, o.arms, o.secondary_rate, o.thickness, o.seed);
    truth = generate_dendrite(p);
    manifest["input"] = {{"generator", {{"width", p.width},
                                        {"height", p.height},
                                        {"arms", p.primary_arms},
                                        {"secondary_rate", p.secondary_rate},
                                        {"thickness", p.thickness},
                                        {"seed", p.seed}}}};
  } else {
    truth = load_image(o.input);
    manifest["input"] = {{"path", o.input}};
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw ImageError(ImageErrorCode::io_failure, "cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::string> files;
  if (!o.generate.empty()) {
    save_image(truth, out_dir / "truth.pgm");
    files.push_back("truth.pgm");
  }

  log::info("sampling ", truth.width(), "x", truth.height(), " image to ratio ", o.stop_ratio);
  const auto result = run_uslads(truth, cfg);
  const auto& trace = result.trace;
  log::info("measured ", result.measurements.size(), " pixels (ratio ", result.measurements.ratio(), ") in ",
            trace.layers, " layers, ", trace.passes, " passes");

  struct Row
  {
    std::string method;
    double ratio;
    double psnr;
    double ssim;
  };
  std::vector<Row> random_rows, uslads_rows;
  std::string timing = "ratio,elapsed_seconds\n";
  nlohmann::json snapshots = nlohmann::json::array();

  for (const auto& snap : trace.snapshots) {
    const Image sampled = sampled_image(truth, snap.mask);
    uslads_rows.push_back({"uslads", snap.ratio, psnr(truth, sampled), ssim(truth, sampled)});
    timing += format_number(snap.ratio) + "," + format_number(snap.elapsed) + "\n";

    nlohmann::json snap_files = nlohmann::json::array();
    const bool write_images = on_grid(snap.target_ratio, o.image_every);
    if (write_images) {
      const auto mask_name = snapshot_name("uslads", snap.percent(), "mask");
      const auto img_name = snapshot_name("uslads", snap.percent(), "img");
      save_image(mask_image(truth.width(), truth.height(), snap.mask), out_dir / mask_name);
      save_image(sampled, out_dir / img_name);
      snap_files.push_back(mask_name);
      snap_files.push_back(img_name);
    }

    if (o.baseline == "random") {
      const auto ms = random_mask(truth, snap.count, o.seed);
      const Image base = sampled_image(truth, ms);
      random_rows.push_back({"random", ms.ratio(), psnr(truth, base), ssim(truth, base)});
      if (write_images) {
        const auto mask_name = snapshot_name("random", snap.percent(), "mask");
        const auto img_name = snapshot_name("random", snap.percent(), "img");
        save_mask(ms, out_dir / mask_name);
        save_image(base, out_dir / img_name);
        snap_files.push_back(mask_name);
        snap_files.push_back(img_name);
      }
    }
    for (const auto& f : snap_files)
      files.push_back(f.get<std::string>());
    snapshots.push_back({{"percent", snap.percent()}, {"count", snap.count}, {"files", snap_files}});
    log::debug("snapshot ", snap.percent(), "% after ", snap.elapsed, " s");
  }

  std::string metrics = "method,ratio,psnr_db,ssim\n";
  for (const auto* rows : {&random_rows, &uslads_rows})
    for (const auto& r : *rows)
      metrics += r.method + "," + format_number(r.ratio) + "," + format_number(r.psnr) + "," +
                 format_number(r.ssim) + "\n";
  write_text(out_dir / "metrics.csv", metrics);
  write_text(out_dir / "timing.csv", timing);
  files.push_back("metrics.csv");
  files.push_back("timing.csv");

  manifest["config"] = {{"stop_ratio", cfg.stop_ratio},
                        {"initial_ratio", cfg.initial_ratio},
                        {"maxiter", cfg.maxiter},
                        {"epsilon", cfg.epsilon},
                        {"max_clusters", cfg.n_max},
                        {"seed", cfg.seed},
                        {"snapshot_every", cfg.snapshot_every},
                        {"baseline", o.baseline}};
  manifest["output_dir"] = out_dir.string();
  manifest["snapshots"] = snapshots;
  manifest["files"] = files;
  manifest["final_ratio"] = result.measurements.ratio();
  manifest["total_seconds"] = trace.snapshots.empty() ? 0.0 : trace.snapshots.back().elapsed;
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return kExitOk;
}

inline int cmd_generate(const GenerateOptions& o)
{
  const auto p = dendrite_params(o.size, o.arms, o.secondary_rate, o.thickness, o.seed);
  save_image(generate_dendrite(p), o.output);
  log::info("wrote ", p.width, "x", p.height, " dendrite to ", o.output);
  return kExitOk;
}

inline int cmd_metrics(const MetricsOptions& o, std::ostream& out)
{
  const Image truth = load_image(o.truth);
  const Image mask = load_image(o.mask);
  if (truth.width() != mask.width() || truth.height() != mask.height()) {
    log::error("truth is ", truth.width(), "x", truth.height(), " but mask is ", mask.width(), "x", mask.height());
    return kExitFailure;
  }
  MeasurementSet ms(truth.width(), truth.height());
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i])
      measure_into(truth, ms, truth.location(i));
  const auto q = quality(truth, ms);
  out << format_number(q.ratio) << "," << format_number(q.psnr_db) << "," << format_number(q.ssim) << "\n";
  return kExitOk;
}

/// Entry point; `args[0]` is the program name.
inline int main(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
  CLI::App app{"Dynamic sparse sampling of skeleton-like objects with hierarchical Gaussian mixtures"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Sample an image and write snapshots, metrics and timing");
  auto* in_opt = run_cmd->add_option("--input", run.input, "Ground-truth PGM");
  auto* gen_opt = run_cmd->add_option("--generate", run.generate, "Generate a WxH dendrite instead of --input");
  in_opt->excludes(gen_opt);
  run_cmd->add_option("--arms", run.arms, "Primary arms of the generated dendrite")->capture_default_str();
  run_cmd->add_option("--secondary-rate", run.secondary_rate, "Secondary arms per pixel of primary arm")
      ->capture_default_str();
  run_cmd->add_option("--thickness", run.thickness, "Arm width in pixels")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Seed for every random stream")->capture_default_str();
  run_cmd->add_option("--initial-ratio", run.initial_ratio, "Initial random sampling ratio")->capture_default_str();
  run_cmd->add_option("--stop-ratio", run.stop_ratio, "Stop once this fraction is measured")->capture_default_str();
  run_cmd->add_option("--maxiter", run.maxiter, "GMM iterations per layer")->capture_default_str();
  run_cmd->add_option("--epsilon", run.epsilon, "Measurements per cluster per iteration")->capture_default_str();
  run_cmd->add_option("--max-clusters", run.max_clusters, "Largest cluster count in the BIC search")
      ->capture_default_str();
  run_cmd->add_option("--snapshot-every", run.snapshot_every, "Metrics/timing snapshot interval")
      ->capture_default_str();
  run_cmd->add_option("--image-every", run.image_every, "Interval for writing mask/image PGMs")
      ->capture_default_str();
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--baseline", run.baseline, "Baseline method: random or none")->capture_default_str();

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic dendrite PGM");
  gen_cmd->add_option("--size", gen.size, "WIDTHxHEIGHT")->required();
  gen_cmd->add_option("--arms", gen.arms, "Primary arms")->capture_default_str();
  gen_cmd->add_option("--secondary-rate", gen.secondary_rate, "Secondary arms per pixel of primary arm")
      ->capture_default_str();
  gen_cmd->add_option("--thickness", gen.thickness, "Arm width in pixels")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("-o,--output", gen.output, "Output PGM")->required();

  MetricsOptions met;
  auto* met_cmd = app.add_subcommand("metrics", "Print ratio,psnr_db,ssim for a truth image and a mask");
  met_cmd->add_option("--truth", met.truth, "Ground-truth PGM")->required();
  met_cmd->add_option("--mask", met.mask, "Mask PGM (nonzero = measured)")->required();

  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed())
      return cmd_run(run);
    if (gen_cmd->parsed())
      return cmd_generate(gen);
    return cmd_metrics(met, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    log::error(e.what());
    return kExitFailure;
  }
}

} // namespace uslads::cli
