#include "fprobe/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "fprobe/error.hpp"
#include "json.hpp"

namespace fprobe {

namespace {

using Json = nlohmann::ordered_json;

Json number(double value) {
  if (!std::isfinite(value)) return nullptr;
  return value;
}

void header(std::ostream& out, std::string_view schema, std::string_view manifest) {
  out << "# schema=" << schema << " manifest=" << manifest << '\n';
}

std::string verdict_label(bool spectral, bool geometric) {
  if (spectral && geometric) return "spike+separable";
  if (spectral) return "spike-only";
  if (geometric) return "separable-only";
  return "neither";
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json anatomy_json(const NoiseAnatomy& a) {
  Json j;
  j["period"] = a.period;
  j["harmonic_power"] = number(a.harmonic_power);
  j["off_harmonic_power"] = number(a.off_harmonic_power);
  j["trace_between"] = number(a.trace_between);
  j["trace_within"] = number(a.trace_within);
  j["lambda_min_within"] = number(a.lambda_min_within);
  j["lambda_max_within"] = number(a.lambda_max_within);
  j["cond_within"] = number(a.cond_within);
  j["fisher"] = number(a.fisher);
  j["bound_low"] = number(a.bound_low);
  j["bound_high"] = number(a.bound_high);
  j["regularization"] = number(a.regularization);
  return j;
}

}  // namespace

bool is_spike(const Spectrum& spectrum, const SpikeRow& row, const VerdictCriteria& criteria) {
  if (row.prominence < criteria.min_prominence) return false;
  if (!spectrum.median_degenerate) return row.peak >= criteria.min_peak;
  // Zero median: norm_mag is raw power, so only ask for non-negligible power.
  const auto k = static_cast<Eigen::Index>(spectrum.n_tokens / row.period);
  return spectrum.power(k) > 1e-12 * total_power(spectrum);
}

Report make_report(const EmbeddingTable& table, const ReportConfig& config) {
  if (config.periods.empty()) throw DomainError("report needs at least one period");
  Report report;
  report.table_label = table.label();
  report.n_tokens = table.n_tokens();
  report.dim = table.dim();
  report.spectrum = dft(table, config.spectrum);

  std::vector<std::size_t> periods = config.periods;
  std::sort(periods.begin(), periods.end());
  periods.erase(std::unique(periods.begin(), periods.end()), periods.end());

  report.cells = probe_sweep(table, periods, config.kinds, config.probe);
  for (const auto& cell : report.cells) {
    if (!cell.result) {
      report.errors.push_back("probe " + to_string(cell.kind) + " T=" +
                              std::to_string(cell.period) + ": " + cell.error);
    }
  }

  for (auto period : periods) {
    PeriodVerdict verdict;
    verdict.period = period;
    try {
      const std::size_t one[] = {period};
      verdict.spike = spike_report(report.spectrum, one).front();
      verdict.spectral = is_spike(report.spectrum, *verdict.spike, config.criteria);
    } catch (const Error& e) {
      report.errors.push_back("spectrum T=" + std::to_string(period) + ": " + e.what());
    }
    try {
      report.anatomy.push_back(noise_anatomy(table, period));
    } catch (const Error& e) {
      report.errors.push_back("scatter T=" + std::to_string(period) + ": " + e.what());
    }
    for (const auto& cell : report.cells) {
      if (cell.period != period || !cell.result) continue;
      const double kappa = cell.result->kappa;
      if (!verdict.best_kappa || kappa > *verdict.best_kappa) verdict.best_kappa = kappa;
    }
    verdict.geometric = verdict.best_kappa && *verdict.best_kappa >= config.criteria.min_kappa;
    verdict.label = verdict_label(verdict.spectral, verdict.geometric);
    report.verdicts.push_back(std::move(verdict));
  }
  return report;
}

Report freq_baseline(const TokenCorpus& corpus, const ReportConfig& config,
                     std::optional<std::size_t> n_values) {
  const auto freq = count_number_tokens(corpus, n_values);
  return make_report(frequency_embedding(freq), config);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum, std::string_view manifest) {
  header(out, kSpectrumSchema, manifest);
  out << "k,nu,power,norm_mag\n";
  for (std::size_t k = 0; k < spectrum.n_tokens; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out << k << ',' << format_double(spectrum.frequency(k)) << ','
        << format_double(spectrum.power(i)) << ',' << format_double(spectrum.norm_mag(i))
        << '\n';
  }
}

void write_spikes_csv(std::ostream& out, const std::vector<PeriodVerdict>& verdicts,
                      std::string_view manifest) {
  header(out, kSpikeSchema, manifest);
  out << "period,harmonic_power,peak,prominence,best_kappa,spectral,geometric,verdict\n";
  for (const auto& v : verdicts) {
    out << v.period << ',';
    if (v.spike) {
      out << format_double(v.spike->harmonic_power) << ',' << format_double(v.spike->peak)
          << ',' << format_double(v.spike->prominence);
    } else {
      out << ",,";
    }
    out << ',' << (v.best_kappa ? format_double(*v.best_kappa) : "") << ','
        << int{v.spectral} << ',' << int{v.geometric} << ',' << v.label << '\n';
  }
}

void write_probe_csv(std::ostream& out, const std::vector<SweepCell>& cells,
                     std::string_view manifest) {
  header(out, kProbeSchema, manifest);
  out << "period,kind,scope,seed,fold,accuracy,kappa,n_test,converged,"
         "final_gradient_norm,degenerate_points,error\n";
  for (const auto& cell : cells) {
    const std::string prefix = std::to_string(cell.period) + ',' + to_string(cell.kind) + ',';
    if (!cell.result) {
      std::string message = cell.error;
      std::replace(message.begin(), message.end(), ',', ';');
      std::replace(message.begin(), message.end(), '\n', ' ');
      out << prefix << "error,,,,,,,,," << message << '\n';
      continue;
    }
    const auto& r = *cell.result;
    out << prefix << "mean,,," << format_double(r.accuracy) << ',' << format_double(r.kappa)
        << ",,,,,\n";
    for (const auto& run : r.runs) {
      out << prefix << "run," << run.seed << ',' << run.fold << ','
          << format_double(run.accuracy) << ','
          << format_double(cohen_kappa(run.accuracy, cell.period)) << ',' << run.n_test << ','
          << int{run.converged} << ',' << format_double(run.final_gradient_norm) << ','
          << run.degenerate_points << ",\n";
    }
  }
}

void write_anatomy_csv(std::ostream& out, const std::vector<NoiseAnatomy>& rows,
                       std::string_view manifest) {
  header(out, kAnatomySchema, manifest);
  out << "period,harmonic_power,off_harmonic_power,trace_between,trace_within,"
         "lambda_min_within,lambda_max_within,cond_within,fisher,bound_low,bound_high,"
         "regularization\n";
  for (const auto& a : rows) {
    out << a.period << ',' << format_double(a.harmonic_power) << ','
        << format_double(a.off_harmonic_power) << ',' << format_double(a.trace_between) << ','
        << format_double(a.trace_within) << ',' << format_double(a.lambda_min_within) << ','
        << format_double(a.lambda_max_within) << ',' << format_double(a.cond_within) << ','
        << format_double(a.fisher) << ',' << format_double(a.bound_low) << ','
        << format_double(a.bound_high) << ',' << format_double(a.regularization) << '\n';
  }
}

void write_projection_csv(std::ostream& out, const RowMatrix& projections, std::size_t period,
                          std::string_view manifest) {
  header(out, kProjectionSchema, manifest);
  out << "n,label,x,y\n";
  for (Eigen::Index n = 0; n < projections.rows(); ++n) {
    out << n << ',' << static_cast<std::size_t>(n) % period << ','
        << format_double(projections(n, 0)) << ',' << format_double(projections(n, 1)) << '\n';
  }
}

std::string scatter_json(const ScatterSummary& s, bool include_matrices,
                         std::string_view manifest) {
  Json j;
  j["schema"] = kScatterSchema;
  j["manifest"] = manifest;
  j["period"] = s.period;
  j["n_tokens"] = s.n_tokens;
  j["balanced"] = s.balanced;
  j["trace_between"] = number(s.trace_between);
  j["trace_within"] = number(s.trace_within);
  j["total_variance"] = number(s.total_variance);
  j["lambda_min_within"] = number(s.lambda_min_within);
  j["lambda_max_within"] = number(s.lambda_max_within);
  j["cond_within"] = number(s.cond_within);
  j["regularization"] = number(s.regularization);
  j["fisher"] = number(s.fisher);
  j["bound_low"] = number(s.bound_low);
  j["bound_high"] = number(s.bound_high);
  if (include_matrices) {
    j["class_means"] = matrix_json(s.class_means);
    j["grand_mean"] = matrix_json(s.grand_mean.transpose());
    j["s_between"] = matrix_json(s.s_between);
    j["s_within"] = matrix_json(s.s_within);
  }
  return j.dump(2);
}

std::string report_json(const Report& report, std::string_view manifest) {
  Json j;
  j["schema"] = kReportSchema;
  j["manifest"] = manifest;
  j["table"] = {{"label", report.table_label}, {"n_tokens", report.n_tokens},
                {"dim", report.dim}};
  j["spectrum"] = {{"median", number(report.spectrum.median)},
                   {"median_degenerate", report.spectrum.median_degenerate}};
  Json verdicts = Json::array();
  for (const auto& v : report.verdicts) {
    Json row;
    row["period"] = v.period;
    if (v.spike) {
      row["harmonic_power"] = number(v.spike->harmonic_power);
      row["peak"] = number(v.spike->peak);
      row["prominence"] = number(v.spike->prominence);
    }
    row["best_kappa"] = v.best_kappa ? number(*v.best_kappa) : Json(nullptr);
    row["spectral"] = v.spectral;
    row["geometric"] = v.geometric;
    row["verdict"] = v.label;
    verdicts.push_back(std::move(row));
  }
  j["verdicts"] = std::move(verdicts);
  Json probes = Json::array();
  for (const auto& cell : report.cells) {
    Json row;
    row["period"] = cell.period;
    row["kind"] = to_string(cell.kind);
    if (cell.result) {
      row["accuracy"] = number(cell.result->accuracy);
      row["kappa"] = number(cell.result->kappa);
      row["runs"] = cell.result->runs.size();
    } else {
      row["error"] = cell.error;
    }
    probes.push_back(std::move(row));
  }
  j["probes"] = std::move(probes);
  Json anatomy = Json::array();
  for (const auto& a : report.anatomy) anatomy.push_back(anatomy_json(a));
  j["anatomy"] = std::move(anatomy);
  j["errors"] = report.errors;
  return j.dump(2);
}

std::string prediction_json(const SynthSpec& spec, const SynthPrediction& p,
                            std::string_view manifest) {
  Json j;
  j["schema"] = kPredictionSchema;
  j["manifest"] = manifest;
  j["period"] = spec.period;
  j["epsilon"] = number(spec.epsilon);
  j["power_target"] = number(spec.power_target);
  j["block_scale"] = number(spec.block_scale);
  j["blocks"] = spec.blocks;
  j["n_tokens"] = spec.n_tokens;
  j["amplitude"] = number(spec.amplitude);
  j["interleaving"] = spec.interleaving();
  j["harmonic_power"] = number(p.harmonic_power);
  j["trace_between"] = number(p.trace_between);
  j["trace_within"] = number(p.trace_within);
  j["fisher"] = number(p.fisher);
  j["accuracy_ceiling"] = number(p.accuracy_ceiling);
  j["ceiling_applies"] = p.ceiling_applies;
  return j.dump(2);
}

std::string audit_json(const MarginalAudit& audit, std::string_view manifest) {
  Json j;
  j["schema"] = kAuditSchema;
  j["manifest"] = manifest;
  j["tv_distance"] = number(audit.tv_distance);
  j["sum_p_squared"] = number(audit.sum_p_squared);
  j["bigram_overlap"] = number(audit.bigram_overlap);
  j["bigrams_before"] = audit.bigrams_before;
  j["aligned"] = audit.aligned;
  auto optional_number = [](const std::optional<double>& v) {
    return v ? number(*v) : Json(nullptr);
  };
  auto optional_bool = [](const std::optional<bool>& v) { return v ? Json(*v) : Json(nullptr); };
  j["number_survival"] = optional_number(audit.number_survival);
  j["bigram_survival"] = optional_number(audit.bigram_survival);
  j["text_identical"] = optional_bool(audit.text_identical);
  j["number_positions_identical"] = optional_bool(audit.number_positions_identical);
  Json tokens = Json::array();
  for (const auto& t : audit.tokens) {
    tokens.push_back({{"token", t.token},
                      {"value", t.value},
                      {"count_before", t.count_before},
                      {"count_after", t.count_after},
                      {"p_before", number(t.p_before)},
                      {"p_after", number(t.p_after)},
                      {"delta", number(t.delta)}});
  }
  j["tokens"] = std::move(tokens);
  return j.dump(2);
}

void write_plan_ndjson(std::ostream& out, const SegmentPlan& plan, std::string_view manifest) {
  Json head;
  head["schema"] = kPlanSchema;
  head["manifest"] = manifest;
  head["sequences"] = plan.sequences.size();
  out << head.dump() << '\n';
  for (const auto& seq : plan.sequences) {
    Json row;
    row["boundaries"] = seq.boundaries;
    row["position_ids"] = seq.position_id;
    row["loss_mask"] = seq.loss_mask;
    out << row.dump() << '\n';
  }
}

}  // namespace fprobe
