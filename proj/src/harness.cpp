#include "spfti/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "spfti/acquisition.hpp"
#include "spfti/errors.hpp"
#include "spfti/io.hpp"
#include "spfti/rng.hpp"

namespace spfti {

namespace {

enum : std::uint64_t { kTagPlan = 0xA1, kTagNoise = 0xA2, kTagEps = 0xA3 };

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ValidationError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    return io::parse_double(v);
  } catch (const FormatError&) {
    throw ValidationError(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(key + ": expected true/false, got '" + v + "'");
}

std::vector<double> parse_real_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& item : split(v, ',')) out.push_back(parse_real(key, item));
  if (out.empty()) throw ValidationError(key + ": empty list");
  return out;
}

template <class T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
  return out;
}

struct Key {
  std::string name;
  std::string help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Key>& keys() {
  using C = ExperimentConfig;
  using S = const std::string&;
  auto fd = [](double v) { return io::format_double(v); };
  static const std::vector<Key> table = {
      {"n_xi", "OPD samples (power of two >= 2)",
       [](C& c, S v) { c.n_xi = parse_u64("n_xi", v); }, [](const C& c) { return std::to_string(c.n_xi); }},
      {"n_p_bar", "pixels per spatial axis (power of two >= 2)",
       [](C& c, S v) { c.n_p_bar = parse_u64("n_p_bar", v); },
       [](const C& c) { return std::to_string(c.n_p_bar); }},
      {"ratios", "comma list of M / n_hs in (0, 1]",
       [](C& c, S v) { c.ratios = parse_real_list("ratios", v); },
       [fd](const C& c) { return join<double>(c.ratios, fd); }},
      {"snr_db", "comma list of SNR levels in dB (inf allowed)",
       [](C& c, S v) { c.snr_db = parse_real_list("snr_db", v); },
       [fd](const C& c) { return join<double>(c.snr_db, fd); }},
      {"repetitions", "realizations of (Omega, noise) per cell",
       [](C& c, S v) { c.repetitions = parse_u64("repetitions", v); },
       [](const C& c) { return std::to_string(c.repetitions); }},
      {"pmf_variant", "kappa_sq | eq9 | uniform",
       [](C& c, S v) { c.pmf_variant = parse_pmf_variant(v); },
       [](const C& c) { return to_string(c.pmf_variant); }},
      {"kappa_variant", "eq8 | product (bound used by kappa_sq)",
       [](C& c, S v) { c.kappa_variant = parse_kappa_variant(v); },
       [](const C& c) { return to_string(c.kappa_variant); }},
      {"epsilon_trials", "Monte-Carlo draws for the epsilon percentile",
       [](C& c, S v) { c.epsilon_trials = parse_u64("epsilon_trials", v); },
       [](const C& c) { return std::to_string(c.epsilon_trials); }},
      {"epsilon_percentile", "percentile of ||D n|| used as epsilon",
       [](C& c, S v) { c.epsilon_percentile = parse_real("epsilon_percentile", v); },
       [fd](const C& c) { return fd(c.epsilon_percentile); }},
      {"seed", "base seed for sampling, noise and calibration",
       [](C& c, S v) { c.seed = parse_u64("seed", v); }, [](const C& c) { return std::to_string(c.seed); }},
      {"phantom_seed", "seed of the synthetic phantom",
       [](C& c, S v) { c.phantom_seed = parse_u64("phantom_seed", v); },
       [](const C& c) { return std::to_string(c.phantom_seed); }},
      {"phantom_file", "volume file to use instead of the synthetic phantom",
       [](C& c, S v) { c.phantom_file = v; }, [](const C& c) { return c.phantom_file; }},
      {"phantom.blob_count", "blobs per spatial map",
       [](C& c, S v) { c.phantom.blobs.count = parse_u64("phantom.blob_count", v); },
       [](const C& c) { return std::to_string(c.phantom.blobs.count); }},
      {"phantom.radius_min", "smallest blob std. dev. (fraction of field width)",
       [](C& c, S v) { c.phantom.blobs.radius_min = parse_real("phantom.radius_min", v); },
       [fd](const C& c) { return fd(c.phantom.blobs.radius_min); }},
      {"phantom.radius_max", "largest blob std. dev. (fraction of field width)",
       [](C& c, S v) { c.phantom.blobs.radius_max = parse_real("phantom.radius_max", v); },
       [fd](const C& c) { return fd(c.phantom.blobs.radius_max); }},
      {"phantom.amp_min", "smallest blob amplitude",
       [](C& c, S v) { c.phantom.blobs.amp_min = parse_real("phantom.amp_min", v); },
       [fd](const C& c) { return fd(c.phantom.blobs.amp_min); }},
      {"phantom.amp_max", "largest blob amplitude",
       [](C& c, S v) { c.phantom.blobs.amp_max = parse_real("phantom.amp_max", v); },
       [fd](const C& c) { return fd(c.phantom.blobs.amp_max); }},
      {"phantom.peak_value", "spectral peak height",
       [](C& c, S v) { c.phantom.peak_value = parse_real("phantom.peak_value", v); },
       [fd](const C& c) { return fd(c.phantom.peak_value); }},
      {"phantom.width_scale", "multiplier on the spectral line half-widths",
       [](C& c, S v) { c.phantom.width_scale = parse_real("phantom.width_scale", v); },
       [fd](const C& c) { return fd(c.phantom.width_scale); }},
      {"full_ratio_mode", "iid | nyquist: how ratio 1.0 is sampled",
       [](C& c, S v) {
         if (v == "iid") c.full_ratio_mode = FullRatioMode::Iid;
         else if (v == "nyquist") c.full_ratio_mode = FullRatioMode::Nyquist;
         else throw ValidationError("full_ratio_mode: expected iid or nyquist, got '" + v + "'");
       },
       [](const C& c) { return std::string(c.full_ratio_mode == FullRatioMode::Iid ? "iid" : "nyquist"); }},
      {"solver.max_iterations", "iteration cap of both solvers",
       [](C& c, S v) { c.solver.max_iterations = parse_u64("solver.max_iterations", v); },
       [](const C& c) { return std::to_string(c.solver.max_iterations); }},
      {"solver.feasibility_tolerance", "relative slack on the residual bound",
       [](C& c, S v) { c.solver.feasibility_tolerance = parse_real("solver.feasibility_tolerance", v); },
       [fd](const C& c) { return fd(c.solver.feasibility_tolerance); }},
      {"solver.objective_tolerance", "relative stopping tolerance of the l1 solver",
       [](C& c, S v) { c.solver.objective_tolerance = parse_real("solver.objective_tolerance", v); },
       [fd](const C& c) { return fd(c.solver.objective_tolerance); }},
      {"solver.real_coefficients", "restrict sparsity coefficients to real values",
       [](C& c, S v) { c.solver.real_coefficients = parse_bool("solver.real_coefficients", v); },
       [](const C& c) { return std::string(c.solver.real_coefficients ? "true" : "false"); }},
      {"solver.verbosity", "0 silent, 2 prints solver progress",
       [](C& c, S v) { c.solver.verbosity = static_cast<int>(parse_u64("solver.verbosity", v)); },
       [](const C& c) { return std::to_string(c.solver.verbosity); }},
      {"output_dir", "directory for CSV and image artifacts",
       [](C& c, S v) { c.output_dir = v; }, [](const C& c) { return c.output_dir.string(); }},
      {"image_slices", "comma list of 1-based wavenumber indices to render (may be empty)",
       [](C& c, S v) {
         c.image_slices.clear();
         if (v.empty()) return;
         for (const std::string& item : split(v, ',')) c.image_slices.push_back(parse_u64("image_slices", item));
       },
       [](const C& c) {
         return join<std::size_t>(c.image_slices, [](const std::size_t& v) { return std::to_string(v); });
       }},
  };
  return table;
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

std::string to_string(PmfVariant v) {
  switch (v) {
    case PmfVariant::KappaSq: return "kappa_sq";
    case PmfVariant::Eq9: return "eq9";
    case PmfVariant::Uniform: return "uniform";
  }
  return "?";
}

std::string to_string(KappaVariant v) { return v == KappaVariant::Eq8 ? "eq8" : "product"; }

PmfVariant parse_pmf_variant(const std::string& s) {
  if (s == "kappa_sq") return PmfVariant::KappaSq;
  if (s == "eq9") return PmfVariant::Eq9;
  if (s == "uniform") return PmfVariant::Uniform;
  throw ValidationError("pmf_variant: expected kappa_sq, eq9 or uniform, got '" + s + "'");
}

KappaVariant parse_kappa_variant(const std::string& s) {
  if (s == "eq8") return KappaVariant::Eq8;
  if (s == "product") return KappaVariant::Product;
  throw ValidationError("kappa_variant: expected eq8 or product, got '" + s + "'");
}

void ExperimentConfig::validate() const {
  (void)dims();
  if (ratios.empty()) throw ValidationError("ratios: empty");
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw ValidationError("ratios: " + io::format_double(r) + " outside (0, 1]");
  }
  if (snr_db.empty()) throw ValidationError("snr_db: empty");
  for (double s : snr_db) {
    if (std::isnan(s) || s == -std::numeric_limits<double>::infinity()) {
      throw ValidationError("snr_db: invalid level " + io::format_double(s));
    }
  }
  if (repetitions < 1) throw ValidationError("repetitions must be >= 1");
  if (epsilon_trials < 10) throw ValidationError("epsilon_trials must be >= 10");
  if (!(epsilon_percentile > 0.0 && epsilon_percentile < 1.0)) {
    throw ValidationError("epsilon_percentile must lie in (0, 1)");
  }
  for (std::size_t l : image_slices) {
    if (l < 1 || l > n_xi) throw ValidationError("image_slices: " + std::to_string(l) + " outside [1, n_xi]");
  }
  solver.validate();
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "default") return cfg;
  if (name == "paper") {
    cfg.n_xi = 512;
    cfg.n_p_bar = 64;
    return cfg;
  }
  if (name == "smoke") {
    cfg.n_xi = 16;
    cfg.n_p_bar = 4;
    cfg.ratios = {0.25, 1.0};
    cfg.snr_db = {20.0};
    cfg.repetitions = 2;
    cfg.epsilon_trials = 20;
    return cfg;
  }
  throw ValidationError("unknown preset '" + name + "' (default|paper|smoke)");
}

void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const Key& k : keys()) {
    if (k.name == key) {
      k.set(cfg, trim(value));
      return;
    }
  }
  throw ValidationError("unknown config key '" + key + "'");
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  std::set<std::string> seen;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ValidationError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ValidationError(where + "repeated key '" + key + "'");
    try {
      apply_config_value(cfg, key, line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  auto is = io::open_input(path);
  std::ostringstream text;
  text << is.rdbuf();
  apply_config_text(cfg, text.str(), path.string());
}

const std::vector<std::pair<std::string, std::string>>& config_schema() {
  static const std::vector<std::pair<std::string, std::string>> schema = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Key& k : keys()) out.emplace_back(k.name, k.help);
    return out;
  }();
  return schema;
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::size_t measurements_for_ratio(double ratio, const Dims& dims) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ValidationError("ratio outside (0, 1]");
  const auto m = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(dims.n_hs())));
  return std::max<std::size_t>(1, m);
}

HSVolume experiment_volume(const ExperimentConfig& cfg) {
  if (!cfg.phantom_file.empty()) {
    HSVolume x = load_volume(cfg.phantom_file);
    if (!(x.dims() == cfg.dims())) throw DimensionError(cfg.phantom_file + ": dims differ from config");
    return x;
  }
  return default_phantom(cfg.dims(), cfg.phantom_seed, cfg.phantom);
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  const Dims dims = cfg.dims();
  const HSVolume x = experiment_volume(cfg);
  const RVector pmf = build_pmf(dims, cfg.pmf_variant, cfg.kappa_variant);
  std::vector<ExperimentRecord> records;

  for (std::size_t ri = 0; ri < cfg.ratios.size(); ++ri) {
    const double ratio = cfg.ratios[ri];
    const bool nyquist = ratio == 1.0 && cfg.full_ratio_mode == FullRatioMode::Nyquist;
    const std::size_t m = nyquist ? dims.n_hs() : measurements_for_ratio(ratio, dims);
    const double exposure = light_exposure(m, dims).ratio;
    for (double snr : cfg.snr_db) {
      const double sigma = snr_to_sigma(x, snr);
      // Plans, noise and calibration draws depend on the ratio only, so the
      // SNR levels of one ratio share their random numbers.
      const std::uint64_t eps_seed = derive_seed(cfg.seed, kTagEps, ri);
      const double eps = nyquist ? calibrate_epsilon_fixed(sigma, full_plan(pmf), cfg.epsilon_trials,
                                                           cfg.epsilon_percentile, eps_seed)
                                 : calibrate_epsilon(sigma, pmf, m, dims, cfg.epsilon_trials,
                                                     cfg.epsilon_percentile, eps_seed);
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        const SamplingPlan plan =
            nyquist ? full_plan(pmf) : sample_omega(pmf, m, derive_seed(cfg.seed, kTagPlan, ri, rep));
        const MeasurementSet ms =
            compressive_acquire(x, plan, sigma, derive_seed(cfg.seed, kTagNoise, ri, rep));
        const std::size_t distinct =
            std::set<std::size_t>(plan.omega.begin(), plan.omega.end()).size();

        ExperimentRecord base;
        base.ratio = ratio;
        base.snr_db = snr;
        base.repetition = rep;
        base.pmf_variant = to_string(cfg.pmf_variant);
        base.kappa_variant = to_string(cfg.kappa_variant);
        base.m = m;
        base.m_distinct = distinct;
        base.m_over_n_xi = static_cast<double>(m) / static_cast<double>(dims.n_xi());
        base.exposure_ratio = exposure;
        base.sigma = sigma;
        base.epsilon = eps;

        auto run = [&](const std::string& method) {
          const auto t0 = std::chrono::steady_clock::now();
          const RecoveryResult r =
              method == "cs" ? solve_bpdn(ms, plan, eps, cfg.solver) : solve_me(ms, plan, cfg.solver);
          const auto t1 = std::chrono::steady_clock::now();
          ExperimentRecord rec = base;
          rec.method = method;
          rec.rsnr_db = rsnr(x, r.volume());
          rec.iterations = r.iterations;
          rec.converged = r.converged;
          rec.residual = r.residual_norm;
          rec.l1_norm = r.l1_norm;
          rec.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
          records.push_back(rec);
        };
        run("cs");
        run("me");
      }
      if (log) {
        const auto first = records.end() - static_cast<std::ptrdiff_t>(2 * cfg.repetitions);
        std::vector<double> cs, me;
        for (auto it = first; it != records.end(); ++it) (it->method == "cs" ? cs : me).push_back(it->rsnr_db);
        *log << "ratio=" << io::format_double(ratio) << " snr=" << io::format_double(snr)
             << " m=" << m << " eps=" << io::format_double(eps) << " rsnr_cs=" << mean_of(cs)
             << " rsnr_me=" << mean_of(me) << std::endl;
      }
    }
  }
  return records;
}

std::vector<CellAggregate> aggregate(const std::vector<ExperimentRecord>& records) {
  std::vector<CellAggregate> cells;
  std::vector<std::vector<double>> values;
  for (const ExperimentRecord& r : records) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CellAggregate& c) {
      return c.ratio == r.ratio && c.snr_db == r.snr_db && c.method == r.method;
    });
    if (it == cells.end()) {
      cells.push_back({r.ratio, r.snr_db, r.method, 0, 0, 0.0, 0.0});
      values.emplace_back();
      it = cells.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - cells.begin());
    it->count += 1;
    it->converged += r.converged ? 1 : 0;
    values[idx].push_back(r.rsnr_db);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& v = values[i];
    const std::size_t n_inf = static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [](double d) { return std::isinf(d) && d > 0; }));
    if (n_inf > 0) {
      cells[i].mean_rsnr_db = std::numeric_limits<double>::infinity();
      cells[i].std_rsnr_db = n_inf == v.size() ? 0.0 : std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double d : v) ss += (d - mu) * (d - mu);
    cells[i].mean_rsnr_db = mu;
    cells[i].std_rsnr_db = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return cells;
}

namespace {
constexpr const char* kRecordHeader =
    "ratio,snr_db,repetition,method,pmf_variant,kappa_variant,m,m_distinct,m_over_n_xi,"
    "exposure_ratio,sigma,epsilon,rsnr_db,iterations,converged,residual,l1_norm";
}

void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  if (records.empty()) throw ValidationError("write_records_csv: no records");
  auto f = [](double v) { return io::format_double(v); };
  os << kRecordHeader << '\n';
  for (const ExperimentRecord& r : records) {
    os << f(r.ratio) << ',' << f(r.snr_db) << ',' << r.repetition << ',' << r.method << ','
       << r.pmf_variant << ',' << r.kappa_variant << ',' << r.m << ',' << r.m_distinct << ','
       << f(r.m_over_n_xi) << ',' << f(r.exposure_ratio) << ',' << f(r.sigma) << ','
       << f(r.epsilon) << ',' << f(r.rsnr_db) << ',' << r.iterations << ','
       << (r.converged ? 1 : 0) << ',' << f(r.residual) << ',' << f(r.l1_norm) << '\n';
  }
}

void export_csv(const std::vector<ExperimentRecord>& records, const std::filesystem::path& path) {
  if (records.empty()) throw ValidationError("export_csv: no records");
  auto os = io::open_output(path);
  write_records_csv(os, records);
  if (!os) throw IoError(path.string() + ": write failed");
}

std::vector<ExperimentRecord> parse_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kRecordHeader) {
    throw FormatError("records CSV: unexpected header");
  }
  std::vector<ExperimentRecord> out;
  for (std::size_t lineno = 2; std::getline(is, line); ++lineno) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 17) {
      throw FormatError("records CSV line " + std::to_string(lineno) + ": expected 17 fields");
    }
    try {
      ExperimentRecord r;
      r.ratio = io::parse_double(f[0]);
      r.snr_db = io::parse_double(f[1]);
      r.repetition = parse_u64("repetition", f[2]);
      r.method = f[3];
      r.pmf_variant = f[4];
      r.kappa_variant = f[5];
      r.m = parse_u64("m", f[6]);
      r.m_distinct = parse_u64("m_distinct", f[7]);
      r.m_over_n_xi = io::parse_double(f[8]);
      r.exposure_ratio = io::parse_double(f[9]);
      r.sigma = io::parse_double(f[10]);
      r.epsilon = io::parse_double(f[11]);
      r.rsnr_db = io::parse_double(f[12]);
      r.iterations = parse_u64("iterations", f[13]);
      r.converged = parse_bool("converged", f[14]);
      r.residual = io::parse_double(f[15]);
      r.l1_norm = io::parse_double(f[16]);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      throw FormatError("records CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_aggregates_csv(std::ostream& os, const std::vector<CellAggregate>& cells) {
  os << "ratio,snr_db,method,count,converged,mean_rsnr_db,std_rsnr_db\n";
  for (const CellAggregate& c : cells) {
    os << io::format_double(c.ratio) << ',' << io::format_double(c.snr_db) << ',' << c.method << ','
       << c.count << ',' << c.converged << ',' << io::format_double(c.mean_rsnr_db) << ','
       << io::format_double(c.std_rsnr_db) << '\n';
  }
}

void write_timing_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << "ratio,snr_db,repetition,method,wall_seconds\n";
  for (const ExperimentRecord& r : records) {
    os << io::format_double(r.ratio) << ',' << io::format_double(r.snr_db) << ',' << r.repetition
       << ',' << r.method << ',' << io::format_double(r.wall_seconds) << '\n';
  }
}

void export_plan_images(const SamplingPlan& plan, const Dims& dims, const std::filesystem::path& dir) {
  if (plan.pmf.size() != dims.n_hs()) throw DimensionError("export_plan_images: plan/dims mismatch");
  write_profile_pgm(dir, "pmf", dims, plan.pmf);
  RVector counts(dims.n_hs(), 0.0);
  for (std::size_t l : plan.omega) counts.at(l - 1) += 1.0;
  write_profile_pgm(dir, "samples", dims, counts);
}

void export_volume_images(const HSVolume& x, const std::vector<std::size_t>& slices,
                          const std::filesystem::path& dir, const std::string& stem) {
  const std::size_t side = x.dims().n_p_bar();
  for (std::size_t l_nu : slices) {
    RVector img(side * side);
    for (std::size_t l_p = 1; l_p <= side * side; ++l_p) img[l_p - 1] = std::max(0.0, x.at(l_nu, l_p));
    io::write_pgm(dir / (stem + "_nu" + std::to_string(l_nu) + ".pgm"), side, side, img);
  }
}

bool export_experiment_images(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  const Dims dims = cfg.dims();
  const HSVolume x = experiment_volume(cfg);
  const RVector pmf = build_pmf(dims, cfg.pmf_variant, cfg.kappa_variant);
  const double ratio = cfg.ratios.front();
  const double snr = *std::max_element(cfg.snr_db.begin(), cfg.snr_db.end());
  const bool nyquist = ratio == 1.0 && cfg.full_ratio_mode == FullRatioMode::Nyquist;
  const std::size_t m = nyquist ? dims.n_hs() : measurements_for_ratio(ratio, dims);
  const double sigma = snr_to_sigma(x, snr);
  const std::uint64_t eps_seed = derive_seed(cfg.seed, kTagEps, 0);
  const double eps = nyquist ? calibrate_epsilon_fixed(sigma, full_plan(pmf), cfg.epsilon_trials,
                                                       cfg.epsilon_percentile, eps_seed)
                             : calibrate_epsilon(sigma, pmf, m, dims, cfg.epsilon_trials,
                                                 cfg.epsilon_percentile, eps_seed);
  const SamplingPlan plan = nyquist ? full_plan(pmf) : sample_omega(pmf, m, derive_seed(cfg.seed, kTagPlan, 0, 0));
  const MeasurementSet ms = compressive_acquire(x, plan, sigma, derive_seed(cfg.seed, kTagNoise, 0, 0));
  const RecoveryResult cs = solve_bpdn(ms, plan, eps, cfg.solver);
  const RecoveryResult me = solve_me(ms, plan, cfg.solver);

  std::vector<std::size_t> slices = cfg.image_slices;
  if (slices.empty()) {
    for (double f : cfg.phantom.peak_fraction) {
      slices.push_back(std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(f * static_cast<double>(dims.n_xi()))), 1, dims.n_xi()));
    }
  }
  std::sort(slices.begin(), slices.end());
  slices.erase(std::unique(slices.begin(), slices.end()), slices.end());
  export_plan_images(plan, dims, dir);
  export_volume_images(x, slices, dir, "truth");
  export_volume_images(cs.volume(), slices, dir, "cs");
  export_volume_images(me.volume(), slices, dir, "me");
  return cs.converged;
}

}  // namespace spfti
