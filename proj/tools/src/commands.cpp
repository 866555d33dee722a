#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fprobe/error.hpp"
#include "fprobe/geometry.hpp"
#include "fprobe/perturb.hpp"
#include "fprobe/probes.hpp"
#include "fprobe/report.hpp"
#include "fprobe/spectral.hpp"
#include "fprobe/svg.hpp"
#include "fprobe/synth.hpp"
#include "json.hpp"
#include "manifest.hpp"

namespace fprobe::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kComponentErrors = 1;
constexpr int kFatal = 2;

fs::path default_out_dir() {
  const char* env = std::getenv("FPROBE_OUT_DIR");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path(".");
}

template <class Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  fn(out);
  if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_with(path, [&](std::ostream& out) { out << text; });
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ',';
    out += p;
  }
  return out;
}

struct SpectrumFlags {
  std::string method = "direct";
  std::string scale = "power";
  bool include_dc = false;

  void add(CLI::App* app) {
    app->add_option("--method", method, "DFT route")
        ->check(CLI::IsMember({"direct", "fft"}));
    app->add_option("--scale", scale, "quantity normalized by its median")
        ->check(CLI::IsMember({"power", "magnitude"}));
    app->add_flag("--include-dc", include_dc, "include nu=0 in the median");
  }

  SpectrumOptions options() const {
    SpectrumOptions o;
    o.method = method == "fft" ? DftMethod::fft : DftMethod::direct;
    o.scale = scale == "magnitude" ? SpectrumScale::magnitude : SpectrumScale::power;
    o.include_dc_in_median = include_dc;
    return o;
  }
};

struct ProbeFlags {
  std::vector<std::string> kinds{"linear"};
  ProbeConfig config;
  bool no_standardize = false;

  void add(CLI::App* app) {
    app->add_option("--kinds", kinds, "probe kinds: linear, mlp, circular")->delimiter(',');
    app->add_option("--seeds", config.n_seeds, "number of seeds");
    app->add_option("--folds", config.n_folds, "cross-validation folds");
    app->add_option("--base-seed", config.base_seed, "first seed");
    app->add_flag("--no-standardize", no_standardize, "skip per-fold z-scoring");
    app->add_option("--l2", config.l2, "linear probe L2 penalty");
    app->add_option("--max-iter", config.max_iterations, "linear probe L-BFGS iterations");
    app->add_option("--tol", config.tolerance, "linear probe gradient-norm tolerance");
    app->add_option("--mlp-hidden", config.mlp_hidden, "MLP hidden width");
    app->add_option("--mlp-epochs", config.mlp_epochs, "MLP epochs");
    app->add_option("--mlp-batch", config.mlp_batch, "MLP minibatch size");
    app->add_option("--mlp-lr", config.mlp_learning_rate, "MLP Adam learning rate");
    app->add_option("--mlp-weight-decay", config.mlp_weight_decay, "MLP weight decay");
    app->add_option("--circular-epochs", config.circular_epochs, "circular probe steps");
    app->add_option("--circular-temperature", config.circular_temperature,
                    "circular probe softmax temperature");
    app->add_option("--circular-lr", config.circular_learning_rate,
                    "circular probe Adam learning rate");
  }

  ProbeConfig base() const {
    ProbeConfig c = config;
    c.standardize = !no_standardize;
    return c;
  }

  std::vector<ProbeKind> parsed() const {
    std::vector<ProbeKind> out;
    for (const auto& k : kinds) out.push_back(parse_probe_kind(k));
    return out;
  }

  void seeds(RunManifest& m) const {
    for (std::size_t s = 0; s < config.n_seeds; ++s) m.seed(config.base_seed + s);
  }
};

struct CriteriaFlags {
  VerdictCriteria criteria;

  void add(CLI::App* app) {
    app->add_option("--min-peak", criteria.min_peak, "spike threshold on norm_mag at 1/T");
    app->add_option("--min-prominence", criteria.min_prominence,
                    "spike threshold on peak / max(neighbours)");
    app->add_option("--min-kappa", criteria.min_kappa, "separability threshold on kappa");
  }
};

void record_parameters(RunManifest& manifest, const CLI::App* app) {
  for (const CLI::Option* opt : app->get_options()) {
    if (opt == app->get_help_ptr()) continue;
    std::string name = opt->get_name(false, false);
    if (name.empty()) name = opt->get_name(true, false);
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    const std::string value = opt->count() > 0 ? join(opt->results()) : opt->get_default_str();
    manifest.parameter(name, value);
  }
}

std::string spectrum_svg(const Spectrum& spectrum, const std::string& title,
                         const std::string& manifest) {
  svg::Series series{"norm_mag", {}, {}};
  for (std::size_t k = 1; k <= spectrum.n_tokens / 2; ++k) {
    series.x.push_back(spectrum.frequency(k));
    series.y.push_back(spectrum.norm_mag(static_cast<Eigen::Index>(k)));
  }
  svg::ChartOptions opt;
  opt.title = title;
  opt.x_label = "frequency nu";
  opt.y_label = "normalized magnitude";
  opt.manifest = manifest;
  return svg::line_chart({series}, opt);
}

std::string kappa_svg(const std::vector<SweepCell>& cells, const std::string& manifest) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& cell : cells) {
    if (!cell.result) continue;
    labels.push_back("T=" + std::to_string(cell.period) + " " + to_string(cell.kind));
    values.push_back(cell.result->kappa);
  }
  svg::ChartOptions opt;
  opt.title = "probe kappa";
  opt.x_label = "period / probe";
  opt.y_label = "Cohen's kappa (%)";
  opt.manifest = manifest;
  return svg::bar_chart(labels, values, opt);
}

std::string projection_svg(const RowMatrix& projections, std::size_t period,
                           const std::string& manifest) {
  std::vector<svg::Series> series(period);
  for (std::size_t r = 0; r < period; ++r) series[r].name = "residue " + std::to_string(r);
  for (Eigen::Index n = 0; n < projections.rows(); ++n) {
    auto& s = series[static_cast<std::size_t>(n) % period];
    s.x.push_back(projections(n, 0));
    s.y.push_back(projections(n, 1));
  }
  svg::ChartOptions opt;
  opt.title = "circular probe, T=" + std::to_string(period);
  opt.x_label = "x";
  opt.y_label = "y";
  opt.width = 480.0;
  opt.height = 480.0;
  opt.manifest = manifest;
  return svg::scatter_chart(series, opt);
}

// Writes the report bundle and returns the number of component errors.
std::size_t write_report_bundle(RunManifest& m, const Report& report, bool with_svg) {
  const std::string ref = m.ref();
  write_with(m.output("spectrum.csv"),
             [&](std::ostream& o) { write_spectrum_csv(o, report.spectrum, ref); });
  write_with(m.output("spikes.csv"),
             [&](std::ostream& o) { write_spikes_csv(o, report.verdicts, ref); });
  write_with(m.output("probe.csv"), [&](std::ostream& o) { write_probe_csv(o, report.cells, ref); });
  write_with(m.output("anatomy.csv"),
             [&](std::ostream& o) { write_anatomy_csv(o, report.anatomy, ref); });
  write_text(m.output("report.json"), report_json(report, ref) + "\n");
  if (with_svg) {
    write_text(m.output("spectrum.svg"), spectrum_svg(report.spectrum, report.table_label, ref));
    write_text(m.output("kappa.svg"), kappa_svg(report.cells, ref));
  }
  for (const auto& e : report.errors) {
    m.error(e);
    std::cerr << "error: " << e << '\n';
  }
  for (const auto& v : report.verdicts) {
    std::cout << "T=" << v.period << ": " << v.label;
    if (v.spike) {
      std::cout << " (peak " << format_double(v.spike->peak) << ", prominence "
                << format_double(v.spike->prominence) << ")";
    }
    if (v.best_kappa) std::cout << " kappa " << format_double(*v.best_kappa);
    std::cout << '\n';
  }
  return report.errors.size();
}

struct Options {
  std::string out;
  std::string table;
  std::vector<std::size_t> periods;
  bool svg = false;
  bool no_svg = false;
  bool matrices = false;
  bool dump_projection = false;
  SpectrumFlags spectrum;
  ProbeFlags probe;
  CriteriaFlags criteria;

  // synth
  std::string synth_kind = "construct";
  std::size_t period = 10;
  double epsilon = 0.009;
  std::optional<double> power_target;
  std::optional<double> amplitude;
  std::optional<double> block_scale;
  std::optional<std::string> preset;
  std::size_t n_tokens = 1000;
  std::size_t dim = 2;
  std::uint64_t seed = 0;
  bool lift = false;
  std::string format = "raw";

  // corpora
  std::string sequences;
  std::string vocab;
  std::optional<std::size_t> vocab_size;
  std::optional<std::size_t> n_values;
  std::string config;
  std::size_t k = 1;
  std::size_t window = 64;
  bool allow_wrap = false;
};

EmbeddingTable load_table(RunManifest& m, const std::string& path) {
  m.input(path);
  return load_embeddings(path);
}

int cmd_spectrum(RunManifest& m, const Options& o) {
  const auto table = load_table(m, o.table);
  const auto spectrum = dft(table, o.spectrum.options());
  const std::string ref = m.ref();
  write_with(m.output("spectrum.csv"),
             [&](std::ostream& out) { write_spectrum_csv(out, spectrum, ref); });
  int status = kOk;
  if (!o.periods.empty()) {
    std::vector<PeriodVerdict> rows;
    for (auto t : o.periods) {
      PeriodVerdict v;
      v.period = t;
      try {
        const std::size_t one[] = {t};
        v.spike = spike_report(spectrum, one).front();
        v.spectral = is_spike(spectrum, *v.spike, o.criteria.criteria);
      } catch (const Error& e) {
        m.error("T=" + std::to_string(t) + ": " + e.what());
        std::cerr << "error: T=" << t << ": " << e.what() << '\n';
        status = kComponentErrors;
      }
      v.label = v.spectral ? "spike" : "no-spike";
      rows.push_back(std::move(v));
    }
    write_with(m.output("spikes.csv"), [&](std::ostream& out) { write_spikes_csv(out, rows, ref); });
  }
  if (o.svg) write_text(m.output("spectrum.svg"), spectrum_svg(spectrum, table.label(), ref));
  return status;
}

int cmd_scatter(RunManifest& m, const Options& o) {
  const auto table = load_table(m, o.table);
  const std::string ref = m.ref();
  std::vector<NoiseAnatomy> rows;
  int status = kOk;
  for (auto t : o.periods) {
    try {
      const auto summary = scatter(table, t);
      write_text(m.output("scatter-T" + std::to_string(t) + ".json"),
                 scatter_json(summary, o.matrices, ref) + "\n");
      rows.push_back(noise_anatomy(table, t));
    } catch (const Error& e) {
      m.error("T=" + std::to_string(t) + ": " + e.what());
      std::cerr << "error: T=" << t << ": " << e.what() << '\n';
      status = kComponentErrors;
    }
  }
  write_with(m.output("anatomy.csv"), [&](std::ostream& out) { write_anatomy_csv(out, rows, ref); });
  return status;
}

int cmd_probe(RunManifest& m, const Options& o) {
  const auto table = load_table(m, o.table);
  o.probe.seeds(m);
  const std::string ref = m.ref();
  const auto kinds = o.probe.parsed();
  std::vector<SweepCell> cells;
  int status = kOk;
  for (auto t : o.periods) {
    for (auto kind : kinds) {
      SweepCell cell;
      cell.period = t;
      cell.kind = kind;
      try {
        ProbeConfig c = o.probe.base();
        c.period = t;
        c.kind = kind;
        if (kind == ProbeKind::circular && o.dump_projection) {
          auto rep = circular_probe(table, c);
          write_with(m.output("projection-T" + std::to_string(t) + ".csv"), [&](std::ostream& out) {
            write_projection_csv(out, rep.projections, t, ref);
          });
          if (o.svg) {
            write_text(m.output("projection-T" + std::to_string(t) + ".svg"),
                       projection_svg(rep.projections, t, ref));
          }
          cell.result = std::move(rep.result);
        } else {
          const std::size_t one_t[] = {t};
          const ProbeKind one_k[] = {kind};
          cell = probe_sweep(table, one_t, one_k, c).front();
        }
      } catch (const Error& e) {
        cell.error = e.what();
      }
      if (!cell.result) {
        m.error("T=" + std::to_string(t) + " " + to_string(kind) + ": " + cell.error);
        std::cerr << "error: T=" << t << ' ' << to_string(kind) << ": " << cell.error << '\n';
        status = kComponentErrors;
      } else {
        std::cout << "T=" << t << ' ' << to_string(kind) << ": accuracy "
                  << format_double(cell.result->accuracy) << " kappa "
                  << format_double(cell.result->kappa) << '\n';
      }
      cells.push_back(std::move(cell));
    }
  }
  write_with(m.output("probe.csv"), [&](std::ostream& out) { write_probe_csv(out, cells, ref); });
  if (o.svg) write_text(m.output("kappa.svg"), kappa_svg(cells, ref));
  return status;
}

int cmd_synth(RunManifest& m, const Options& o) {
  const auto format = o.format == "npy" ? TableFormat::npy : TableFormat::raw_f32;
  const std::string ext = o.format == "npy" ? "npy" : "f32";
  const std::string ref = m.ref();
  if (o.synth_kind == "construct") {
    if (o.power_target.has_value() == o.amplitude.has_value()) {
      throw DomainError("construct needs exactly one of --C or --A");
    }
    if (o.block_scale.has_value() == o.preset.has_value()) {
      throw DomainError("construct needs exactly one of --B or --preset");
    }
    double amplitude = 0.0;
    if (o.amplitude) {
      amplitude = *o.amplitude;
    } else {
      amplitude = make_synth_spec(o.period, o.epsilon, *o.power_target, 0.0).amplitude;
    }
    const double b = o.block_scale ? *o.block_scale
                                   : preset_block_scale(parse_synth_preset(*o.preset), o.period, amplitude);
    const SynthSpec spec = o.amplitude
                               ? make_synth_spec_from_amplitude(o.period, o.epsilon, amplitude, b)
                               : make_synth_spec(o.period, o.epsilon, *o.power_target, b);
    save_embeddings(construct(spec), m.output(ext), format, ref);
    write_text(m.output("prediction.json"), prediction_json(spec, predict(spec), ref) + "\n");
    std::cout << "N=" << spec.n_tokens << " K=" << spec.blocks
              << " A=" << format_double(spec.amplitude) << " B=" << format_double(spec.block_scale)
              << (spec.interleaving() ? " (interleaving)" : "") << '\n';
    return kOk;
  }
  m.seed(o.seed);
  EmbeddingTable table = [&] {
    if (o.synth_kind == "circle") {
      return ideal_circle(o.period, o.n_tokens, o.dim,
                          o.lift ? std::optional<std::uint64_t>(o.seed) : std::nullopt);
    }
    if (o.synth_kind == "zero-harmonic") {
      return zero_harmonic_table(o.period, o.n_tokens, o.dim, o.seed);
    }
    return gaussian_table(o.n_tokens, o.dim, o.seed);
  }();
  save_embeddings(table, m.output(ext), format, ref);
  return kOk;
}

int cmd_perturb(RunManifest& m, const Options& o) {
  m.input(o.sequences);
  m.input(o.vocab);
  const TokenCorpus corpus = load_corpus(o.sequences, o.vocab, o.vocab_size);
  PerturbedCorpus result;
  if (o.config == "isolate") {
    result = isolate_k(corpus, o.k);
  } else if (o.config == "context") {
    result = context_window(corpus, o.window);
  } else if (o.config == "swap") {
    m.seed(o.seed);
    result = swap_numbers(corpus, o.seed, o.allow_wrap);
  } else {
    m.seed(o.seed);
    result = unigram_replace(corpus, o.seed);
  }
  const std::string ref = m.ref();
  nlohmann::ordered_json head;
  head["schema"] = "fprobe.corpus.v1";
  head["manifest"] = ref;
  head["perturbation"] = result.provenance.perturbation;
  head["parameters"] = result.provenance.parameters;
  if (result.provenance.seed) head["seed"] = *result.provenance.seed;
  save_sequences(result.corpus.sequences, m.output("sequences.ndjson"), head.dump());
  save_number_vocab(result.corpus.number_vocab, m.output("number_vocab.json"));
  if (result.plan) {
    write_with(m.output("plan.ndjson"),
               [&](std::ostream& out) { write_plan_ndjson(out, *result.plan, ref); });
  }
  if (!result.window_source.empty()) {
    write_with(m.output("windows.csv"), [&](std::ostream& out) {
      out << "# schema=fprobe.windows.v1 manifest=" << ref << "\nwindow,sequence,offset\n";
      for (std::size_t w = 0; w < result.window_source.size(); ++w) {
        out << w << ',' << result.window_source[w].first << ','
            << result.window_source[w].second << '\n';
      }
    });
  }
  const auto audit = marginal_audit(corpus, result);
  write_text(m.output("audit.json"), audit_json(audit, ref) + "\n");
  std::cout << result.provenance.perturbation << ": " << result.corpus.sequences.size()
            << " sequences, TV " << format_double(audit.tv_distance) << ", bigram overlap "
            << format_double(audit.bigram_overlap) << '\n';
  return kOk;
}

ReportConfig report_config(const Options& o) {
  ReportConfig c;
  if (!o.periods.empty()) c.periods = o.periods;
  c.kinds = o.probe.parsed();
  c.probe = o.probe.base();
  c.spectrum = o.spectrum.options();
  c.criteria = o.criteria.criteria;
  return c;
}

int cmd_report(RunManifest& m, const Options& o) {
  const auto table = load_table(m, o.table);
  o.probe.seeds(m);
  const auto report = make_report(table, report_config(o));
  return write_report_bundle(m, report, !o.no_svg) == 0 ? kOk : kComponentErrors;
}

int cmd_freq_baseline(RunManifest& m, const Options& o) {
  m.input(o.sequences);
  m.input(o.vocab);
  o.probe.seeds(m);
  const TokenCorpus corpus = load_corpus(o.sequences, o.vocab, o.vocab_size);
  const auto report = freq_baseline(corpus, report_config(o), o.n_values);
  return write_report_bundle(m, report, !o.no_svg) == 0 ? kOk : kComponentErrors;
}

void add_out(CLI::App* app, Options& o) {
  app->add_option("-o,--out", o.out,
                  "output prefix (default: $FPROBE_OUT_DIR/<subcommand>, else ./<subcommand>)");
}

}  // namespace

int run(std::vector<std::string> args) {
  if (!args.empty() && args.front() == "replay") {
    if (args.size() != 2) {
      std::cerr << "usage: fprobe replay <manifest.json>\n";
      return kFatal;
    }
    std::ifstream in(args[1]);
    if (!in) {
      std::cerr << "error: cannot open " << args[1] << '\n';
      return kFatal;
    }
    try {
      const auto j = nlohmann::json::parse(in);
      if (j.value("schema", "") != kManifestSchema) throw FormatError("not a run manifest");
      return run(j.at("argv").get<std::vector<std::string>>());
    } catch (const std::exception& e) {
      std::cerr << "error: " << args[1] << ": " << e.what() << '\n';
      return kFatal;
    }
  }

  const std::vector<std::string> original = args;
  CLI::App app{"fprobe: Fourier and geometric diagnostics for number embeddings"};
  app.set_version_flag("--version", FPROBE_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Options o;

  auto* spectrum = app.add_subcommand("spectrum", "DFT of an embedding table, CSV and SVG");
  spectrum->add_option("table", o.table, "embedding table (.npy or raw-f32)")
      ->required()
      ->check(CLI::ExistingFile);
  spectrum->add_option("--periods", o.periods, "also report spikes at these periods")
      ->delimiter(',');
  spectrum->add_flag("--svg", o.svg, "write an SVG line chart");
  o.spectrum.add(spectrum);
  o.criteria.add(spectrum);
  add_out(spectrum, o);

  auto* scat = app.add_subcommand("scatter", "residue-class scatter and Fisher bounds");
  scat->add_option("table", o.table)->required()->check(CLI::ExistingFile);
  scat->add_option("--periods", o.periods, "periods T")->delimiter(',')->required();
  scat->add_flag("--matrices", o.matrices, "include S_B, S_W and class means in the JSON");
  add_out(scat, o);

  auto* probe = app.add_subcommand("probe", "mod-T probes under seeds x folds CV");
  probe->add_option("table", o.table)->required()->check(CLI::ExistingFile);
  probe->add_option("--periods", o.periods, "periods T")->delimiter(',')->required();
  probe->add_flag("--svg", o.svg, "write a kappa bar chart");
  probe->add_flag("--dump-projection", o.dump_projection,
                  "write circular-probe 2-D coordinates per period");
  o.probe.add(probe);
  add_out(probe, o);

  auto* synth = app.add_subcommand("synth", "synthetic embedding tables");
  synth->add_option("--kind", o.synth_kind, "table family")
      ->check(CLI::IsMember({"construct", "circle", "zero-harmonic", "gaussian"}));
  synth->add_option("--T", o.period, "period");
  synth->add_option("--epsilon", o.epsilon, "construct: ceiling slack epsilon");
  synth->add_option("--C", o.power_target, "construct: harmonic power target");
  synth->add_option("--A", o.amplitude, "construct: residue amplitude (instead of --C)");
  synth->add_option("--B", o.block_scale, "construct: block scale");
  synth->add_option("--preset", o.preset, "construct: interleaved or separable (instead of --B)")
      ->check(CLI::IsMember({"interleaved", "separable"}));
  synth->add_option("--N", o.n_tokens, "circle/zero-harmonic/gaussian: number of tokens");
  synth->add_option("--d", o.dim, "circle/zero-harmonic/gaussian: dimension");
  synth->add_option("--seed", o.seed, "random seed");
  synth->add_flag("--lift", o.lift, "circle: apply a seeded random orthogonal map");
  synth->add_option("--format", o.format, "output format")->check(CLI::IsMember({"raw", "npy"}));
  add_out(synth, o);

  auto* perturb = app.add_subcommand("perturb", "corpus perturbations with segment plans");
  perturb->add_option("--sequences", o.sequences, "NDJSON token sequences")
      ->required()
      ->check(CLI::ExistingFile);
  perturb->add_option("--vocab", o.vocab, "number vocabulary JSON")
      ->required()
      ->check(CLI::ExistingFile);
  perturb->add_option("--vocab-size", o.vocab_size, "vocabulary size (default: inferred)");
  perturb->add_option("--config", o.config, "perturbation")
      ->required()
      ->check(CLI::IsMember({"isolate", "context", "swap", "unigram"}));
  perturb->add_option("--k", o.k, "isolate: numbers per segment");
  perturb->add_option("--window", o.window, "context: window length");
  perturb->add_option("--seed", o.seed, "swap/unigram: random seed");
  perturb->add_flag("--allow-wrap", o.allow_wrap, "swap: let slices wrap around the pool");
  add_out(perturb, o);

  auto add_report_flags = [&](CLI::App* sub) {
    sub->add_option("--periods", o.periods, "periods T (default 2,5,10)")->delimiter(',');
    sub->add_flag("--no-svg", o.no_svg, "skip SVG charts");
    o.spectrum.add(sub);
    o.probe.add(sub);
    o.criteria.add(sub);
    add_out(sub, o);
  };

  auto* freq = app.add_subcommand("freq-baseline", "report on the token-frequency embedding");
  freq->add_option("--sequences", o.sequences)->required()->check(CLI::ExistingFile);
  freq->add_option("--vocab", o.vocab)->required()->check(CLI::ExistingFile);
  freq->add_option("--vocab-size", o.vocab_size, "vocabulary size (default: inferred)");
  freq->add_option("--n-values", o.n_values, "number values 0..N-1 (default: from vocab)");
  add_report_flags(freq);

  auto* report = app.add_subcommand("report", "spectrum, probes and noise anatomy in one bundle");
  report->add_option("table", o.table)->required()->check(CLI::ExistingFile);
  add_report_flags(report);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kFatal;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const fs::path prefix = o.out.empty() ? default_out_dir() / name : fs::path(o.out);
  RunManifest manifest(name, original, prefix);
  record_parameters(manifest, sub);

  int status = kOk;
  try {
    if (name == "spectrum") status = cmd_spectrum(manifest, o);
    else if (name == "scatter") status = cmd_scatter(manifest, o);
    else if (name == "probe") status = cmd_probe(manifest, o);
    else if (name == "synth") status = cmd_synth(manifest, o);
    else if (name == "perturb") status = cmd_perturb(manifest, o);
    else if (name == "freq-baseline") status = cmd_freq_baseline(manifest, o);
    else status = cmd_report(manifest, o);
  } catch (const std::exception& e) {
    manifest.error(e.what());
    std::cerr << "error: " << e.what() << '\n';
    status = kFatal;
  }
  manifest.write(status);
  return status;
}

}  // namespace fprobe::cli
