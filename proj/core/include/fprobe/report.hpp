#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fprobe/embedding_io.hpp"
#include "fprobe/geometry.hpp"
#include "fprobe/perturb.hpp"
#include "fprobe/probes.hpp"
#include "fprobe/spectral.hpp"
#include "fprobe/synth.hpp"

namespace fprobe {

inline constexpr std::string_view kSpectrumSchema = "fprobe.spectrum.v1";
inline constexpr std::string_view kSpikeSchema = "fprobe.spikes.v1";
inline constexpr std::string_view kProbeSchema = "fprobe.probe.v1";
inline constexpr std::string_view kProjectionSchema = "fprobe.projection.v1";
inline constexpr std::string_view kAnatomySchema = "fprobe.anatomy.v1";
inline constexpr std::string_view kScatterSchema = "fprobe.scatter.v1";
inline constexpr std::string_view kReportSchema = "fprobe.report.v1";
inline constexpr std::string_view kPredictionSchema = "fprobe.synth-prediction.v1";
inline constexpr std::string_view kPlanSchema = "fprobe.segment-plan.v1";
inline constexpr std::string_view kAuditSchema = "fprobe.marginal-audit.v1";

/// Thresholds behind the two-tier verdict. A period has a spectral spike when
/// norm_mag at 1/T reaches min_peak and stands min_prominence above both
/// neighbours; it is geometrically encoded when some probe reaches min_kappa.
struct VerdictCriteria {
  double min_peak = 10.0;
  double min_prominence = 2.0;
  double min_kappa = 50.0;
};

/// Spike test for one spike_report row. When the spectrum's median is zero
/// the peak threshold is replaced by "power above 1e-12 of the total".
bool is_spike(const Spectrum& spectrum, const SpikeRow& row, const VerdictCriteria& criteria);

struct ReportConfig {
  std::vector<std::size_t> periods{2, 5, 10};
  std::vector<ProbeKind> kinds{ProbeKind::linear};
  ProbeConfig probe;
  SpectrumOptions spectrum;
  VerdictCriteria criteria;
};

struct PeriodVerdict {
  std::size_t period = 0;
  std::optional<SpikeRow> spike;  ///< unset when T does not divide N
  std::optional<double> best_kappa;
  bool spectral = false;
  bool geometric = false;
  std::string label;  ///< "spike+separable", "spike-only", "separable-only", "neither"
};

struct Report {
  std::string table_label;
  std::size_t n_tokens = 0;
  std::size_t dim = 0;
  Spectrum spectrum;
  std::vector<SweepCell> cells;
  std::vector<NoiseAnatomy> anatomy;  ///< periods where scatter succeeded
  std::vector<PeriodVerdict> verdicts;
  std::vector<std::string> errors;  ///< per-period component failures

  bool ok() const noexcept { return errors.empty(); }
};

/// Spectrum, per-period spikes, probe sweep and noise anatomy in one pass.
/// Component failures for a period are collected in `errors`; the rest of the
/// report is still produced.
Report make_report(const EmbeddingTable& table, const ReportConfig& config);

/// Report on the token-frequency embedding of a corpus. Throws when the corpus
/// has no number tokens.
Report freq_baseline(const TokenCorpus& corpus, const ReportConfig& config,
                     std::optional<std::size_t> n_values = std::nullopt);

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double value);

// CSV writers. Every file starts with "# schema=<id> manifest=<ref>".
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum, std::string_view manifest);
void write_spikes_csv(std::ostream& out, const std::vector<PeriodVerdict>& verdicts,
                      std::string_view manifest);
void write_probe_csv(std::ostream& out, const std::vector<SweepCell>& cells,
                     std::string_view manifest);
void write_anatomy_csv(std::ostream& out, const std::vector<NoiseAnatomy>& rows,
                       std::string_view manifest);
void write_projection_csv(std::ostream& out, const RowMatrix& projections, std::size_t period,
                          std::string_view manifest);

// JSON documents carry "schema" and "manifest" keys; non-finite numbers are null.
std::string scatter_json(const ScatterSummary& summary, bool include_matrices,
                         std::string_view manifest);
std::string report_json(const Report& report, std::string_view manifest);
std::string prediction_json(const SynthSpec& spec, const SynthPrediction& prediction,
                            std::string_view manifest);
std::string audit_json(const MarginalAudit& audit, std::string_view manifest);
/// One JSON line per sequence: boundaries, position_ids, loss_mask.
void write_plan_ndjson(std::ostream& out, const SegmentPlan& plan, std::string_view manifest);

}  // namespace fprobe
