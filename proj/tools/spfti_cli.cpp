// spfti: command-line front end for coherence maps, phantoms, acquisition,
// recovery and experiment sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spfti/acquisition.hpp"
#include "spfti/coherence.hpp"
#include "spfti/errors.hpp"
#include "spfti/harness.hpp"
#include "spfti/io.hpp"
#include "spfti/phantom.hpp"
#include "spfti/recovery.hpp"
#include "spfti/rng.hpp"

namespace fs = std::filesystem;
using namespace spfti;

namespace {

struct Common {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::string preset = "default";
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--output", c.output, "output directory (overrides output_dir)");
  sub->add_option("--seed", c.seed, "base seed (phantom: the phantom seed)");
  sub->add_option("--preset", c.preset, "default | paper | smoke")->capture_default_str();
  sub->add_option("--set", c.overrides, "extra key=value assignment, repeatable");
}

ExperimentConfig load_config(const Common& c, bool seed_is_phantom = false) {
  ExperimentConfig cfg = preset(c.preset);
  if (!c.config.empty()) apply_config_file(cfg, c.config);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    apply_config_value(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (c.seed) (seed_is_phantom ? cfg.phantom_seed : cfg.seed) = *c.seed;
  if (!c.output.empty()) cfg.output_dir = c.output;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  auto os = io::open_output(path);
  os << text;
  if (!os) throw IoError(path.string() + ": write failed");
}

std::string describe(const RecoveryResult& r) {
  return "iterations=" + std::to_string(r.iterations) + " converged=" + (r.converged ? "yes" : "no") +
         " residual=" + io::format_double(r.residual_norm) + " l1=" + io::format_double(r.l1_norm);
}

// ---- coherence -------------------------------------------------------------

struct CoherenceArgs {
  bool brute = false;
  std::size_t k = 10;
  double eps_fail = 0.01;
  double c = 1.0;
};

int run_coherence(const Common& common, const CoherenceArgs& a) {
  const ExperimentConfig cfg = load_config(common);
  const Dims dims = cfg.dims();
  const fs::path out = cfg.output_dir;
  for (KappaVariant kv : {KappaVariant::Eq8, KappaVariant::Product}) {
    const CoherenceProfile p = closed_form_profile(dims, kv);
    auto os = io::open_output(out / ("kappa_" + to_string(kv) + ".csv"));
    write_profile_csv(os, dims, p.kappa);
    std::cout << "kappa " << to_string(kv) << ": squared norm " << io::format_double(p.kappa_sq_norm)
              << ", sample complexity (K=" << a.k << ", eps_fail=" << io::format_double(a.eps_fail)
              << ", c=" << io::format_double(a.c) << ") " << sample_complexity(a.k, a.eps_fail, dims, kv, a.c)
              << '\n';
  }
  write_profile_pgm(out, "kappa", dims, closed_form_profile(dims, cfg.kappa_variant).kappa);
  const RVector pmf = build_pmf(dims, cfg.pmf_variant, cfg.kappa_variant);
  {
    auto os = io::open_output(out / ("pmf_" + to_string(cfg.pmf_variant) + ".csv"));
    write_profile_csv(os, dims, pmf);
  }
  write_profile_pgm(out, "pmf", dims, pmf);
  if (a.brute) {
    const CoherenceProfile b = brute_force_local_coherence(dims);
    auto os = io::open_output(out / "mu_brute.csv");
    write_profile_csv(os, dims, b.kappa);
    std::cout << "brute-force squared norm " << io::format_double(b.kappa_sq_norm) << '\n';
  }
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

// ---- phantom ---------------------------------------------------------------

int run_phantom(const Common& common) {
  const ExperimentConfig cfg = load_config(common, true);
  const fs::path out = cfg.output_dir;
  const HSVolume x = experiment_volume(cfg);
  save_volume(x, out / "phantom.vol");
  nlohmann::json side;
  side["n_xi"] = cfg.n_xi;
  side["n_p_bar"] = cfg.n_p_bar;
  side["phantom_seed"] = cfg.phantom_seed;
  side["source"] = cfg.phantom_file.empty() ? "synthetic" : cfg.phantom_file;
  side["config"] = to_config_text(cfg);
  write_text(out / "phantom.json", side.dump(1) + "\n");
  std::vector<std::size_t> slices = cfg.image_slices;
  if (slices.empty()) {
    for (double f : cfg.phantom.peak_fraction) {
      slices.push_back(std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(f * cfg.n_xi)), 1, cfg.n_xi));
    }
  }
  std::sort(slices.begin(), slices.end());
  slices.erase(std::unique(slices.begin(), slices.end()), slices.end());
  export_volume_images(x, slices, out, "phantom");
  std::cout << "wrote " << (out / "phantom.vol").string() << " (norm " << io::format_double(x.norm()) << ")\n";
  return 0;
}

// ---- acquire ---------------------------------------------------------------

struct AcquireArgs {
  std::string volume;
  std::optional<double> ratio;
  std::optional<double> snr;
  bool binary = false;
};

int run_acquire(const Common& common, const AcquireArgs& a) {
  ExperimentConfig cfg = load_config(common);
  if (!a.volume.empty()) cfg.phantom_file = a.volume;
  const Dims dims = cfg.dims();
  const HSVolume x = experiment_volume(cfg);
  const double ratio = a.ratio.value_or(cfg.ratios.front());
  const double snr = a.snr.value_or(*std::max_element(cfg.snr_db.begin(), cfg.snr_db.end()));
  const RVector pmf = build_pmf(dims, cfg.pmf_variant, cfg.kappa_variant);
  const std::uint64_t plan_seed = derive_seed(cfg.seed, 0xC11, 1);
  const std::uint64_t noise_seed = derive_seed(cfg.seed, 0xC11, 2);
  const SamplingPlan plan = sample_omega(pmf, measurements_for_ratio(ratio, dims), plan_seed);
  const double sigma = snr_to_sigma(x, snr);

  MeasurementSet ms = compressive_acquire(x, plan, sigma, noise_seed);
  if (a.binary) {
    // Same labels and noise, but the clean part goes through 0/1 masks and
    // the all-on references.
    const CVector clean = compressive_acquire(x, plan, 0.0, 0).y;
    const CVector demixed = demix_binary(binary_acquire(x, plan));
    for (std::size_t j = 0; j < ms.y.size(); ++j) ms.y[j] += demixed[j] - clean[j];
  }
  ms.plan_seed = plan_seed;
  nlohmann::json prov;
  prov["ratio"] = io::format_double(ratio);
  prov["snr_db"] = io::format_double(snr);
  prov["pmf_variant"] = to_string(cfg.pmf_variant);
  prov["kappa_variant"] = to_string(cfg.kappa_variant);
  prov["volume"] = cfg.phantom_file.empty() ? "synthetic" : cfg.phantom_file;
  prov["binary_masks"] = a.binary;
  const fs::path stem = fs::path(cfg.output_dir) / "measurements";
  save_measurements(ms, stem, prov);
  const ExposureReport e = light_exposure(plan.m, dims);
  std::cout << "M=" << plan.m << " sigma=" << io::format_double(sigma)
            << " exposure_ratio=" << io::format_double(e.ratio) << '\n'
            << "wrote " << stem.string() << ".{bin,json}\n";
  return 0;
}

// ---- recover ---------------------------------------------------------------

struct RecoverArgs {
  std::string measurements;
  std::string method = "both";
  std::optional<double> epsilon;
  std::string reference;
  bool trace = false;
};

int run_recover(const Common& common, const RecoverArgs& a) {
  ExperimentConfig cfg = load_config(common);
  nlohmann::json prov;
  const MeasurementSet ms = load_measurements(a.measurements, &prov);
  if (prov.contains("pmf_variant")) cfg.pmf_variant = parse_pmf_variant(prov["pmf_variant"].get<std::string>());
  if (prov.contains("kappa_variant")) {
    cfg.kappa_variant = parse_kappa_variant(prov["kappa_variant"].get<std::string>());
  }
  const Dims dims = ms.dims;
  const RVector pmf = build_pmf(dims, cfg.pmf_variant, cfg.kappa_variant);
  SamplingPlan plan;
  plan.pmf = pmf;
  plan.omega = ms.omega;
  plan.m = ms.omega.size();
  plan.seed = ms.plan_seed;
  for (std::size_t l : ms.omega) {
    if (l < 1 || l > dims.n_hs()) throw RangeError("measurement label out of range");
    plan.weights.push_back(1.0 / std::sqrt(pmf[l - 1]));
  }
  std::optional<HSVolume> ref;
  if (!a.reference.empty()) {
    ref = load_volume(a.reference);
    if (!(ref->dims() == dims)) throw DimensionError(a.reference + ": dims differ from measurements");
  }
  const fs::path out = cfg.output_dir;
  SolverConfig solver = cfg.solver;
  solver.record_trace = a.trace;
  bool all_converged = true;

  auto emit = [&](const std::string& name, const RecoveryResult& r) {
    save_result(r, out / name);
    save_volume(r.volume(), out / (name + ".vol"));
    if (a.trace && !r.trace.empty()) {
      auto os = io::open_output(out / (name + "_trace.csv"));
      write_trace_csv(os, r.trace);
    }
    std::cout << name << ": " << describe(r);
    if (ref) std::cout << " rsnr_db=" << io::format_double(rsnr(*ref, r.volume()));
    std::cout << '\n';
    all_converged &= r.converged;
  };

  if (a.method == "cs" || a.method == "both") {
    const double eps = a.epsilon.value_or(calibrate_epsilon(ms.sigma, pmf, plan.m, dims, cfg.epsilon_trials,
                                                            cfg.epsilon_percentile, derive_seed(cfg.seed, 0xC12)));
    RecoveryResult r = solve_bpdn(ms, plan, eps, solver);
    std::cout << "epsilon=" << io::format_double(eps) << '\n';
    emit("cs", r);
  }
  if (a.method == "me" || a.method == "both") emit("me", solve_me(ms, plan, solver));
  return all_converged ? 0 : 1;
}

// ---- experiment ------------------------------------------------------------

int run_experiment_cmd(const Common& common, bool images) {
  const ExperimentConfig cfg = load_config(common);
  const fs::path out = cfg.output_dir;
  write_text(out / "config.txt", to_config_text(cfg));
  const std::vector<ExperimentRecord> records = run_experiment(cfg, &std::cerr);
  export_csv(records, out / "records.csv");
  {
    auto os = io::open_output(out / "cells.csv");
    write_aggregates_csv(os, aggregate(records));
  }
  {
    auto os = io::open_output(out / "timing.csv");
    write_timing_csv(os, records);
  }
  bool all = std::all_of(records.begin(), records.end(), [](const ExperimentRecord& r) { return r.converged; });
  if (images) all &= export_experiment_images(cfg, out / "images");
  const auto bad = std::count_if(records.begin(), records.end(), [](const ExperimentRecord& r) { return !r.converged; });
  std::cout << records.size() << " runs, " << bad << " not converged; wrote " << out.string() << '\n';
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressive single-pixel FTI toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "spfti 0.1.0");

  Common common;

  CoherenceArgs coh;
  auto* c_coh = app.add_subcommand("coherence", "write local coherence bounds and the sampling pmf");
  add_common(c_coh, common);
  c_coh->add_flag("--brute", coh.brute, "also write the brute-force coherence (small dims only)");
  c_coh->add_option("--k", coh.k, "sparsity for the sample complexity estimate")->capture_default_str();
  c_coh->add_option("--eps-fail", coh.eps_fail, "failure probability for the estimate")->capture_default_str();
  c_coh->add_option("--c", coh.c, "constant of the sample complexity estimate")->capture_default_str();

  auto* c_ph = app.add_subcommand("phantom", "generate the synthetic phantom volume");
  add_common(c_ph, common);

  AcquireArgs acq;
  auto* c_acq = app.add_subcommand("acquire", "simulate one compressive acquisition");
  add_common(c_acq, common);
  c_acq->add_option("--volume", acq.volume, "volume file (default: synthetic phantom)")->check(CLI::ExistingFile);
  c_acq->add_option("--ratio", acq.ratio, "M / n_hs (default: first configured ratio)")->check(CLI::Range(1e-9, 1.0));
  c_acq->add_option("--snr", acq.snr, "SNR in dB (default: highest configured level)");
  c_acq->add_flag("--binary", acq.binary, "acquire through 0/1 coded apertures and demix");

  RecoverArgs rec;
  auto* c_rec = app.add_subcommand("recover", "reconstruct a volume from saved measurements");
  add_common(c_rec, common);
  c_rec->add_option("--measurements", rec.measurements, "measurement stem (without .bin/.json)")->required();
  c_rec->add_option("--method", rec.method, "cs | me | both")
      ->check(CLI::IsMember({"cs", "me", "both"}))
      ->capture_default_str();
  c_rec->add_option("--epsilon", rec.epsilon, "fidelity radius (default: calibrated from sigma)");
  c_rec->add_option("--reference", rec.reference, "ground-truth volume for RSNR")->check(CLI::ExistingFile);
  c_rec->add_flag("--trace", rec.trace, "write the solver trace as CSV");

  bool no_images = false;
  auto* c_exp = app.add_subcommand("experiment", "run the ratio x SNR x repetition sweep");
  add_common(c_exp, common);
  c_exp->add_flag("--no-images", no_images, "skip the PGM artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_coh->parsed()) return run_coherence(common, coh);
    if (c_ph->parsed()) return run_phantom(common);
    if (c_acq->parsed()) return run_acquire(common, acq);
    if (c_rec->parsed()) return run_recover(common, rec);
    if (c_exp->parsed()) return run_experiment_cmd(common, !no_images);
  } catch (const spfti::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
