#include "hypergibbs/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypergibbs/convexity.hpp"
#include "hypergibbs/harness.hpp"

namespace hypergibbs {

namespace {

struct Options {
  std::string model;
  std::optional<double> lambda, beta, q, k, h, kappa, width, half_width, cells;
  std::string i_law;
  std::string config;
  std::size_t n = 0;
  std::size_t n1 = 0;
  std::string c = "1";
  std::optional<std::size_t> t;
  std::optional<Seed> seed;
  std::size_t samples = 0;
  bool exact = false;
  int r = 1;
  std::optional<double> alpha;
  std::string n_list;
  bool independent = false;
  std::string out_path;
  std::string csv_path;
  std::string in_path;
  std::size_t trials = 2000;
  unsigned workers = 0;
};

void add_model_options(CLI::App* app, Options& o) {
  app->add_option("--model", o.model, "model name");
  app->add_option("--config", o.config, "JSON model config {\"model\", \"params\", \"seed\"}");
  app->add_option("--lambda", o.lambda, "independent set fugacity");
  app->add_option("--beta", o.beta, "inverse temperature");
  app->add_option("--q", o.q, "number of colors");
  app->add_option("--k", o.k, "edge arity");
  app->add_option("--h", o.h, "external field");
  app->add_option("--kappa", o.kappa, "soft-state width");
  app->add_option("--width", o.width, "partition class width");
  app->add_option("--half-width", o.half_width, "half width of the spin range");
  app->add_option("--cells", o.cells, "number of cells");
  app->add_option("--i-law", o.i_law, "coupling law as value:prob,value:prob");
}

void add_graph_options(CLI::App* app, Options& o) {
  app->add_option("--n", o.n, "number of nodes");
  app->add_option("--c", o.c, "edge density");
  app->add_option("--seed", o.seed, "seed");
  app->add_option("--workers", o.workers, "worker threads (default HYPERGIBBS_WORKERS)");
}

void add_output_options(CLI::App* app, Options& o) {
  app->add_option("--out", o.out_path, "append JSON-lines records here");
  app->add_option("--csv", o.csv_path, "write CSV here");
}

ModelConfig model_config(const Options& o) {
  ModelConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw std::invalid_argument("cannot read config " + o.config);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = parse_model_config(ss.str());
  }
  if (!o.model.empty()) cfg.model = o.model;
  if (cfg.model.empty()) throw std::invalid_argument("--model is required");
  auto put = [&](const char* name, const std::optional<double>& v) {
    if (v) cfg.params.values[name] = *v;
  };
  put("lambda", o.lambda);
  put("beta", o.beta);
  put("q", o.q);
  put("k", o.k);
  put("h", o.h);
  put("kappa", o.kappa);
  put("width", o.width);
  put("half_width", o.half_width);
  put("cells", o.cells);
  if (!o.i_law.empty()) {
    cfg.params.i_law.clear();
    std::stringstream ss(o.i_law);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw std::invalid_argument("--i-law entries are value:prob");
      cfg.params.i_law.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    }
  }
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

std::vector<std::size_t> parse_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(static_cast<std::size_t>(std::stoull(item)));
  return out;
}

ExperimentConfig experiment_config(const std::string& name, const Options& o) {
  ExperimentConfig cfg;
  cfg.experiment = name;
  cfg.model = model_config(o);
  cfg.seed = cfg.model.seed;
  cfg.n = o.n;
  cfg.n1 = o.n1;
  cfg.c = Density::parse(o.c);
  cfg.t = o.t;
  cfg.samples = o.samples;
  cfg.r = o.r;
  cfg.alpha = o.alpha;
  cfg.n_list = parse_list(o.n_list);
  cfg.coupled = !o.independent;
  cfg.exact = o.exact;
  cfg.workers = o.workers;
  return cfg;
}

int emit(const std::vector<ExperimentRecord>& records, const Options& o, std::ostream& out) {
  write_jsonl(out, records);
  if (!o.out_path.empty()) {
    std::ofstream f(o.out_path, std::ios::app);
    if (!f) throw std::invalid_argument("cannot open " + o.out_path);
    write_jsonl(f, records);
  }
  if (!o.csv_path.empty()) {
    std::ofstream f(o.csv_path);
    if (!f) throw std::invalid_argument("cannot open " + o.csv_path);
    write_csv(f, records);
  }
  for (const auto& r : records)
    if (r.verdict == Verdict::fail) return 1;
  return 0;
}

nlohmann::ordered_json describe_model(const ModelSpec& m) {
  nlohmann::ordered_json j;
  j["model"] = m.name;
  j["arity"] = m.arity();
  j["states"] = m.domain.size();
  j["discrete"] = m.domain.is_discrete();
  j["node_law_support"] = m.node_pot.law.size();
  j["edge_law_support"] = m.edge_pot.law.size();
  nlohmann::ordered_json soft;
  soft["kappa"] = m.soft.kappa;
  soft["rho_min"] = m.soft.rho_min;
  soft["rho_max"] = m.soft.rho_max;
  soft["j_max"] = m.soft.j_max;
  soft["alpha"] = m.soft.alpha;
  j["soft_state"] = soft;
  if (m.domain.is_discrete() && m.arity() == 2 && m.deterministic()) {
    const auto& t = m.edge_pot.law.front().value;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < t.dim(); ++a) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (std::size_t b = 0; b < t.dim(); ++b) row.push_back(t[a * t.dim() + b]);
      rows.push_back(row);
    }
    j["edge_table"] = rows;
  }
  auto report = check_soft_state(m);
  j["soft_state_ok"] = report.ok;
  if (!report.ok) j["soft_state_failures"] = report.failures;
  return j;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Partition functions of sparse random hypergraphs: generation, exact and sampled log Z, "
               "PSD certification and interpolation experiments"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  Options o;

  auto* model_cmd = app.add_subcommand("model", "inspect a model");
  model_cmd->require_subcommand(1);
  auto* show = model_cmd->add_subcommand("show", "print the model and its soft-state parameters");
  add_model_options(show, o);

  auto* gen = app.add_subcommand("gen", "sample a hypergraph as JSON");
  add_model_options(gen, o);
  add_graph_options(gen, o);
  gen->add_option("--t", o.t, "block-restricted edge count (interpolation point)");
  gen->add_option("--n1", o.n1, "first block size");

  auto* logz = app.add_subcommand("logz", "log Z of one sampled instance");
  add_model_options(logz, o);
  add_graph_options(logz, o);
  add_output_options(logz, o);
  logz->add_flag("--exact", o.exact, "exact enumeration (default: Monte Carlo)");
  logz->add_option("--samples", o.samples, "Monte Carlo samples");

  auto* certify = app.add_subcommand("certify", "PSD certificate for alpha - J");
  add_model_options(certify, o);
  certify->add_option("--seed", o.seed, "seed for sampled checks");
  certify->add_option("--trials", o.trials, "falsifier trials per tensor");

  auto* interp = app.add_subcommand("interpolate", "E log Z along the interpolation path");
  add_model_options(interp, o);
  add_graph_options(interp, o);
  add_output_options(interp, o);
  interp->add_option("--n1", o.n1, "first block size")->required();
  interp->add_option("--samples", o.samples, "samples per t")->required();
  interp->add_flag("--independent", o.independent, "no common random numbers across t");

  auto* moments = app.add_subcommand("moments", "exact moment inequality on random base graphs");
  add_model_options(moments, o);
  add_graph_options(moments, o);
  add_output_options(moments, o);
  moments->add_option("--n1", o.n1, "first block size")->required();
  moments->add_option("--r", o.r, "replica count");
  moments->add_option("--alpha", o.alpha, "shift (default: the model's alpha)");
  moments->add_option("--samples", o.samples, "number of base graphs")->required();

  auto* conc = app.add_subcommand("concentrate", "spread of log Z / N against N");
  add_model_options(conc, o);
  add_graph_options(conc, o);
  add_output_options(conc, o);
  conc->add_option("--n-list", o.n_list, "comma separated N values")->required();
  conc->add_option("--samples", o.samples, "samples per N")->required();

  auto* conv = app.add_subcommand("converge", "a_N table, superadditivity residuals, Fekete extrapolate");
  add_model_options(conv, o);
  add_graph_options(conv, o);
  add_output_options(conv, o);
  conv->add_option("--n-list", o.n_list, "comma separated N values")->required();
  conv->add_option("--samples", o.samples, "samples per N")->required();

  auto* endpoint = app.add_subcommand("endpoint", "chain end against independent blocks");
  add_model_options(endpoint, o);
  add_graph_options(endpoint, o);
  add_output_options(endpoint, o);
  endpoint->add_option("--n1", o.n1, "first block size")->required();
  endpoint->add_option("--samples", o.samples, "samples")->required();

  auto* degrees = app.add_subcommand("degrees", "node degree distribution against the binomial law");
  add_model_options(degrees, o);
  add_graph_options(degrees, o);
  add_output_options(degrees, o);
  degrees->add_option("--n-list", o.n_list, "comma separated N values");
  degrees->add_option("--samples", o.samples, "graphs per N")->required();

  auto* replay_cmd = app.add_subcommand("replay", "re-run records and compare results bit for bit");
  replay_cmd->add_option("--in", o.in_path, "JSON-lines file")->required();
  replay_cmd->add_option("--workers", o.workers, "worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (show->parsed()) {
      auto cfg = model_config(o);
      out << describe_model(build_model(cfg.model, cfg.params)).dump(2) << "\n";
      return 0;
    }
    if (gen->parsed()) {
      auto cfg = model_config(o);
      ModelSpec m = build_model(cfg.model, cfg.params);
      Density c = Density::parse(o.c);
      Hypergraph g = o.t ? sample_interpolated(o.n, c, m.arity(), InterpolationPoint{*o.t, o.n1, o.n - o.n1},
                                               derive_seed(cfg.seed, kTagGraph))
                         : sample_er(o.n, c, m.arity(), derive_seed(cfg.seed, kTagGraph));
      out << g.to_json() << "\n";
      return 0;
    }
    if (certify->parsed()) {
      auto cfg = model_config(o);
      ModelSpec m = build_model(cfg.model, cfg.params);
      auto mc = certify_model(m, cfg.seed, o.trials);
      out << mc.certificate.describe() << "\n";
      auto j = nlohmann::ordered_json::parse(mc.certificate.to_json());
      j["method"] = mc.method;
      if (!mc.notes.empty()) j["notes"] = mc.notes;
      out << j.dump() << "\n";
      return mc.certificate.verdict == PsdCertificate::Verdict::no_alpha ? 1 : 0;
    }
    if (replay_cmd->parsed()) {
      std::ifstream in(o.in_path);
      if (!in) throw std::invalid_argument("cannot read " + o.in_path);
      auto records = read_jsonl(in);
      bool all_same = true;
      for (const auto& r : records) {
        auto again = replay(r, o.workers);
        const bool same = again.same_outcome(r);
        all_same = all_same && same;
        out << r.experiment << ": " << (same ? "identical" : "DIFFERENT") << "\n";
      }
      return all_same ? 0 : 1;
    }
    if (logz->parsed()) {
      if (!o.exact && o.samples == 0) o.samples = 10000;
      auto cfg = experiment_config("logz", o);
      auto rec = run_experiment(cfg);
      std::optional<double> se;
      if (!o.exact) se = rec.get("std_error");
      const double lz = rec.get("log_z");
      out << logz_row_json(std::isinf(lz) ? LogValue::neg_inf() : LogValue::from_log(lz), se,
                           o.exact ? "exact" : "mc", cfg.seed)
          << "\n";
      std::ostringstream sink;
      return emit({rec}, o, sink);
    }
    std::string name;
    if (interp->parsed()) name = "interpolate";
    else if (moments->parsed()) name = "moments";
    else if (conc->parsed()) name = "concentrate";
    else if (conv->parsed()) name = "converge";
    else if (endpoint->parsed()) name = "endpoint";
    else if (degrees->parsed()) name = "degrees";
    auto cfg = experiment_config(name, o);
    return emit({run_experiment(cfg)}, o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace hypergibbs
