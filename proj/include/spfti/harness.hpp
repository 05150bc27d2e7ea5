#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spfti/coherence.hpp"
#include "spfti/phantom.hpp"
#include "spfti/recovery.hpp"

namespace spfti {

enum class FullRatioMode { Iid, Nyquist };

struct ExperimentConfig {
  std::size_t n_xi = 64;
  std::size_t n_p_bar = 16;
  std::vector<double> ratios = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> snr_db = {10.0, 15.0, 20.0};
  std::size_t repetitions = 10;
  PmfVariant pmf_variant = PmfVariant::KappaSq;
  KappaVariant kappa_variant = KappaVariant::Eq8;
  std::size_t epsilon_trials = 100;
  double epsilon_percentile = 0.95;
  std::uint64_t seed = 1;
  std::uint64_t phantom_seed = 7;
  std::string phantom_file;  ///< empty: synthetic phantom
  PhantomParams phantom;
  FullRatioMode full_ratio_mode = FullRatioMode::Iid;
  SolverConfig solver;
  std::filesystem::path output_dir = "out";
  std::vector<std::size_t> image_slices;  ///< 1-based wavenumber indices to render

  Dims dims() const { return Dims(n_xi, n_p_bar); }
  void validate() const;
};

/// Named starting points: "default" (64, 16), "paper" (512, 64; long
/// running) and "smoke" (16, 4).
ExperimentConfig preset(const std::string& name);

/// Applies `key = value` lines ('#' starts a comment). Unknown or repeated
/// keys are errors that name the line.
void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& origin = "config");
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);
/// Applies one assignment, e.g. from the command line.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// The keys accepted by apply_config_*, each with a one-line description.
const std::vector<std::pair<std::string, std::string>>& config_schema();
std::string to_config_text(const ExperimentConfig& cfg);

std::string to_string(PmfVariant v);
std::string to_string(KappaVariant v);
PmfVariant parse_pmf_variant(const std::string& s);
KappaVariant parse_kappa_variant(const std::string& s);

struct ExperimentRecord {
  double ratio = 0.0;
  double snr_db = 0.0;
  std::size_t repetition = 0;
  std::string method;  ///< "cs" or "me"
  std::string pmf_variant;
  std::string kappa_variant;
  std::size_t m = 0;
  std::size_t m_distinct = 0;
  double m_over_n_xi = 0.0;
  double exposure_ratio = 0.0;
  double sigma = 0.0;
  double epsilon = 0.0;
  double rsnr_db = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double residual = 0.0;
  double l1_norm = 0.0;
  double wall_seconds = 0.0;  ///< not part of the CSV; see write_timing_csv

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

struct CellAggregate {
  double ratio = 0.0;
  double snr_db = 0.0;
  std::string method;
  std::size_t count = 0;
  std::size_t converged = 0;
  double mean_rsnr_db = 0.0;
  double std_rsnr_db = 0.0;
};

/// Number of samples M for a ratio M / n_hs (rounded, at least 1).
std::size_t measurements_for_ratio(double ratio, const Dims& dims);

/// The volume the experiment runs on (file or synthetic phantom).
HSVolume experiment_volume(const ExperimentConfig& cfg);

/// Runs the sweep. Records are ordered by (ratio, snr, repetition, method).
/// `log`, when given, receives one progress line per cell.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Per (ratio, snr, method) mean and sample standard deviation of RSNR.
std::vector<CellAggregate> aggregate(const std::vector<ExperimentRecord>& records);

void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records);
void export_csv(const std::vector<ExperimentRecord>& records, const std::filesystem::path& path);
std::vector<ExperimentRecord> parse_records_csv(std::istream& is);
void write_aggregates_csv(std::ostream& os, const std::vector<CellAggregate>& cells);
void write_timing_csv(std::ostream& os, const std::vector<ExperimentRecord>& records);

/// PGM slices of the pmf and of the sampled-label counts of `plan`.
void export_plan_images(const SamplingPlan& plan, const Dims& dims, const std::filesystem::path& dir);
/// Spatial maps of `x` at the given 1-based wavenumber indices.
void export_volume_images(const HSVolume& x, const std::vector<std::size_t>& slices,
                          const std::filesystem::path& dir, const std::string& stem);

/// Re-runs repetition 0 of the first ratio at the highest SNR (same seeds as
/// run_experiment) and writes pmf/sample slices plus truth, CS and ME spatial
/// maps at cfg.image_slices (default: the three spectral peaks). Returns
/// whether the CS solve converged.
bool export_experiment_images(const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace spfti
