// anonctl: batch front end and HTTP service for the anonymization engine.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>

#include "anon/anon.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool g_quiet = false;

void log(const std::string& cmd, const std::string& msg) {
  if (!g_quiet) std::cerr << "anonctl " << cmd << ": " << msg << "\n";
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    std::cout.flush();
    if (!std::cout) throw anon::IoError("cannot write to stdout");
  } else {
    anon::write_text_file(out_path, content);
  }
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

anon::DetectorConfig load_detector_config(const std::string& path, const std::string& endpoint) {
  auto cfg = path.empty() ? anon::DetectorConfig::defaults()
                          : anon::detector_config_from_json(json::parse(anon::read_text_file(path)));
  if (!endpoint.empty()) cfg.model_endpoint = endpoint;
  return cfg;
}

std::unique_ptr<anon::LabelingClient> make_client(const anon::DetectorConfig& cfg,
                                                  const std::vector<anon::DetectorKind>& kinds) {
  if (std::find(kinds.begin(), kinds.end(), anon::DetectorKind::model) == kinds.end()) return nullptr;
  if (!cfg.model_endpoint) throw anon::InvalidConfig("the model detector needs --model-endpoint");
  return std::make_unique<anon::HttpLabelingClient>(*cfg.model_endpoint, cfg.timeout_ms);
}

/// doc_id -> spans from a suggestions JSONL file.
std::map<std::string, std::vector<anon::EntitySpan>> read_suggestions(const std::string& path,
                                                                     const std::vector<anon::Document>& docs) {
  std::map<std::string, const anon::Document*> by_id;
  for (const auto& d : docs) by_id[d.id] = &d;
  std::map<std::string, std::vector<anon::EntitySpan>> out;
  anon::read_jsonl(path, [&](const json& j, std::size_t line) {
    const auto id = anon::detail::require_string(j, "doc_id", line);
    auto it = by_id.find(id);
    if (it == by_id.end()) throw anon::SchemaError(line, "doc_id", "unknown document '" + id + "'");
    auto spans = anon::spans_from_json(j, *it->second, line);
    auto& dst = out[id];
    dst.insert(dst.end(), spans.begin(), spans.end());
  });
  return out;
}

struct Options {
  // shared
  std::string input, out, config, endpoint, format = "json", detectors = "regex,conventional";
  std::vector<std::string> preds, names;
  std::string suggestions, project, policy = "letters", host = "127.0.0.1", project_dir;
  int port = 0;
  bool macro = false, case_insensitive = false;
  std::size_t min_len = 2;
  anon::PrepConfig prep;
  std::string out_dir;
};

int cmd_prep(const Options& o) {
  const auto docs = anon::read_documents(o.input);
  const auto ds = anon::prepare_dataset(docs, o.prep);
  fs::create_directories(o.out_dir);
  auto write_split = [&](const std::string& name, const std::vector<anon::TrainingExample>& v) {
    std::string buf;
    for (const auto& ex : v) buf += anon::dump_line(anon::to_json(ex));
    anon::write_text_file((fs::path(o.out_dir) / (name + ".jsonl")).string(), buf);
  };
  write_split("train", ds.examples.train);
  write_split("validation", ds.examples.validation);
  write_split("test", ds.examples.test);
  const json stats{{"config", anon::to_json(o.prep)},
                   {"documents", docs.size()},
                   {"examples",
                    {{"train", ds.examples.train.size()},
                     {"validation", ds.examples.validation.size()},
                     {"test", ds.examples.test.size()}}},
                   {"prep", anon::to_json(ds.stats)},
                   {"corpus", anon::to_json(anon::corpus_stats(docs))}};
  anon::write_text_file((fs::path(o.out_dir) / "stats.json").string(), stats.dump(2) + "\n");
  log("prep", std::to_string(docs.size()) + " documents -> " + o.out_dir);
  return 0;
}

int cmd_detect(const Options& o) {
  const auto docs = anon::read_documents(o.input);
  const auto kinds = anon::parse_detectors(o.detectors);
  const auto cfg = load_detector_config(o.config, o.endpoint);
  const auto client = make_client(cfg, kinds);
  std::string buf;
  bool partial = false;
  for (const auto& doc : docs) {
    const auto r = anon::run_detectors(doc, cfg, kinds, client.get());
    partial = partial || r.partial;
    for (const auto& w : r.warnings) log("detect", doc.id + ": " + w);
    buf += anon::dump_line(anon::detection_to_json(doc.id, r));
  }
  emit(o.out, buf);
  log("detect", std::to_string(docs.size()) + " documents" + (partial ? " (partial)" : ""));
  return 0;
}

int cmd_uniformize(const Options& o) {
  const auto docs = anon::read_documents(o.input);
  const auto spans = read_suggestions(o.suggestions, docs);
  anon::UniformizeConfig ucfg;
  ucfg.case_sensitive = !o.case_insensitive;
  ucfg.min_surface_len = o.min_len;
  std::string buf;
  std::size_t added = 0;
  for (const auto& doc : docs) {
    auto it = spans.find(doc.id);
    anon::DetectionResult r;
    if (it != spans.end()) {
      r.spans = anon::uniformize(doc, it->second, ucfg);
      added += r.spans.size() - it->second.size();
    }
    buf += anon::dump_line(anon::detection_to_json(doc.id, r));
  }
  emit(o.out, buf);
  log("uniformize", std::to_string(added) + " spans added");
  return 0;
}

std::string render_as(const anon::AnonymizedDocument& a, const std::string& format) {
  if (format == "txt") return anon::unicode::encode_utf8(a.text);
  if (format == "html") return anon::export_html(a);
  return anon::dump_line(anon::to_json(a));
}

int cmd_redact(const Options& o) {
  if (o.format != "txt" && o.format != "html" && o.format != "json")
    throw anon::ValidationError("--format must be txt, html or json");
  std::vector<anon::AnonymizedDocument> outs;
  std::vector<std::string> warnings;
  if (!o.project.empty()) {
    outs.push_back(anon::export_project(anon::load(o.project), &warnings));
  } else {
    if (o.input.empty() || o.suggestions.empty())
      throw anon::ValidationError("redact needs --project, or --input with --suggestions");
    const auto docs = anon::read_documents(o.input);
    const auto spans = read_suggestions(o.suggestions, docs);
    const auto policy = anon::parse_placeholder_policy(o.policy);
    for (const auto& doc : docs) {
      auto it = spans.find(doc.id);
      const std::vector<anon::EntitySpan> accepted = it == spans.end() ? std::vector<anon::EntitySpan>{} : it->second;
      const auto map = anon::assign_placeholders(doc, accepted, policy, {}, &warnings);
      outs.push_back(anon::render(doc, accepted, map));
    }
  }
  if (o.format != "json" && outs.size() > 1)
    throw anon::ValidationError("--format " + o.format + " writes one document; use --format json");
  std::string buf;
  for (const auto& a : outs) buf += render_as(a, o.format);
  for (const auto& w : warnings) log("redact", w);
  emit(o.out, buf);
  return 0;
}

int cmd_eval(const Options& o) {
  if (o.format != "table" && o.format != "json") throw anon::ValidationError("--format must be table or json");
  if (!o.names.empty() && o.names.size() != o.preds.size())
    throw anon::ValidationError("give one --name per --pred");
  const auto gold = anon::read_documents(o.input);
  std::vector<anon::TableRow> rows;
  json reports = json::array();
  auto add_row = [&](const std::string& name, const anon::DetectionPipeline& pipeline) {
    const auto r = anon::evaluate_conditions(gold, pipeline, {}, o.macro);
    for (const auto& w : r.normal.warnings) log("eval", w);
    rows.push_back({name, r.normal, r.uniformized});
    auto j = anon::to_json(r);
    j["name"] = name;
    reports.push_back(std::move(j));
  };

  for (std::size_t i = 0; i < o.preds.size(); ++i) {
    const auto spans = read_suggestions(o.preds[i], gold);
    const auto name = o.names.empty() ? fs::path(o.preds[i]).stem().string() : o.names[i];
    add_row(name, [&spans](const anon::Document& doc) {
      anon::DetectionResult r;
      if (auto it = spans.find(doc.id); it != spans.end()) r.spans = it->second;
      return r;
    });
  }
  if (o.preds.empty()) {
    const auto kinds = anon::parse_detectors(o.detectors);
    const auto cfg = load_detector_config(o.config, o.endpoint);
    const auto client = make_client(cfg, kinds);
    add_row(o.detectors, [&](const anon::Document& doc) { return anon::run_detectors(doc, cfg, kinds, client.get()); });
  }
  emit(o.out, o.format == "table" ? anon::format_table(rows) : reports.dump(2) + "\n");
  return 0;
}

int cmd_stats(const Options& o) {
  if (o.format != "table" && o.format != "json") throw anon::ValidationError("--format must be table or json");
  const auto stats = anon::corpus_stats(anon::read_documents(o.input));
  if (o.format == "json") {
    emit(o.out, anon::to_json(stats).dump(2) + "\n");
    return 0;
  }
  std::ostringstream os;
  os << std::left << std::setw(10) << "language" << std::right << std::setw(11) << "documents" << std::setw(12)
     << "tokens" << std::setw(12) << "anon_tok" << std::setw(12) << "entities" << std::setw(12) << "anon_ent" << "\n";
  for (const auto& [lang, ls] : stats.languages)
    os << std::left << std::setw(10) << anon::to_string(lang) << std::right << std::setw(11) << ls.documents
       << std::setw(12) << ls.tokens << std::setw(12) << ls.anonymized_tokens << std::setw(12) << ls.entities
       << std::setw(12) << ls.anonymized_entities << "\n";
  emit(o.out, os.str());
  return 0;
}

anon::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const Options& o) {
  anon::ServiceConfig cfg;
  cfg.project_dir = o.project_dir.empty() ? env_or("ANON_PROJECT_DIR", "projects") : o.project_dir;
  cfg.detectors = load_detector_config(o.config, o.endpoint);
  const auto docs_dir = fs::path(ANON_DOCS_DIR) / "openapi.json";
  if (fs::exists(docs_dir)) cfg.openapi_path = docs_dir.string();
  int port = o.port;
  if (port == 0) port = std::stoi(env_or("ANON_PORT", "8080"));
  anon::Service service(cfg);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  log("serve", "listening on " + o.host + ":" + std::to_string(port) + ", projects in " + cfg.project_dir.string());
  if (!service.listen(o.host, port)) throw anon::IoError("cannot listen on " + o.host + ":" + std::to_string(port));
  g_service = nullptr;
  return 0;
}

void add_prep_flags(CLI::App* app, Options& o) {
  app->add_option("--max-len", o.prep.max_seq_len, "Maximum tokens per window")->capture_default_str();
  app->add_option("--stride-ratio", o.prep.truncation_stride_ratio, "Overlap between consecutive windows")
      ->capture_default_str();
  app->add_option("--neg-ratio", o.prep.neg_to_pos_ratio, "Negatives kept per positive example")
      ->capture_default_str();
  app->add_option("--seed", o.prep.rng_seed, "Seed for splitting and sampling")->capture_default_str();
  app->add_flag("--global-sampling{false}", o.prep.per_language_sampling,
                "Sample negatives over all languages together instead of per language");
}

void add_detector_flags(CLI::App* app, Options& o) {
  app->add_option("--detectors", o.detectors, "Comma separated: regex,gazetteer,conventional,model")
      ->capture_default_str();
  app->add_option("--config", o.config, "Detector configuration JSON");
  app->add_option("--model-endpoint", o.endpoint, "Inference endpoint for the model detector");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Court-ruling anonymization toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("-q,--quiet", g_quiet, "No progress messages on stderr");
  Options o;

  auto* prep = app.add_subcommand("prep", "Build windowed IOB2 training data and corpus statistics");
  prep->add_option("-i,--input", o.input, "Documents JSONL with gold spans")->required();
  prep->add_option("-o,--out-dir", o.out_dir, "Output directory")->required();
  add_prep_flags(prep, o);

  auto* detect = app.add_subcommand("detect", "Run detectors over documents, writing suggestions JSONL");
  detect->add_option("-i,--input", o.input, "Documents JSONL")->required();
  detect->add_option("-o,--out", o.out, "Output file (default stdout)");
  add_detector_flags(detect, o);

  auto* uni = app.add_subcommand("uniformize", "Propagate suggestions to every occurrence of their surface");
  uni->add_option("-i,--input", o.input, "Documents JSONL")->required();
  uni->add_option("-s,--suggestions", o.suggestions, "Suggestions JSONL")->required();
  uni->add_option("-o,--out", o.out, "Output file (default stdout)");
  uni->add_flag("--case-insensitive", o.case_insensitive, "Match surfaces ignoring case");
  uni->add_option("--min-len", o.min_len, "Shortest surface to propagate")->capture_default_str();

  auto* redact = app.add_subcommand("redact", "Render anonymized text from a project or accepted suggestions");
  redact->add_option("-p,--project", o.project, "Project file");
  redact->add_option("-i,--input", o.input, "Documents JSONL");
  redact->add_option("-s,--suggestions", o.suggestions, "Suggestions JSONL, all treated as accepted");
  redact->add_option("--placeholders", o.policy, "letters or label_numbered")->capture_default_str();
  redact->add_option("--format", o.format, "txt, html or json")->capture_default_str();
  redact->add_option("-o,--out", o.out, "Output file (default stdout)");

  auto* eval = app.add_subcommand("eval", "Score predictions against gold, normal and uniformized");
  eval->add_option("-g,--gold", o.input, "Gold documents JSONL")->required();
  eval->add_option("--pred", o.preds, "Suggestions JSONL (repeatable, one table row each)");
  eval->add_option("--name", o.names, "Row name per --pred");
  eval->add_option("--format", o.format, "table or json")->capture_default_str();
  eval->add_flag("--macro", o.macro, "Add macro averages over labels");
  eval->add_option("-o,--out", o.out, "Output file (default stdout)");
  add_detector_flags(eval, o);

  auto* serve = app.add_subcommand("serve", "Start the HTTP review service");
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--port", o.port, "Port (default $ANON_PORT or 8080)");
  serve->add_option("--project-dir", o.project_dir, "Project directory (default $ANON_PROJECT_DIR or ./projects)");
  serve->add_option("--config", o.config, "Detector configuration JSON");
  serve->add_option("--model-endpoint", o.endpoint, "Inference endpoint for the model detector");

  auto* stats = app.add_subcommand("stats", "Per-document token and entity counts");
  stats->add_option("-i,--input", o.input, "Documents JSONL")->required();
  stats->add_option("--format", o.format, "json or table")->capture_default_str();
  stats->add_option("-o,--out", o.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "prep") return cmd_prep(o);
    if (name == "detect") return cmd_detect(o);
    if (name == "uniformize") return cmd_uniformize(o);
    if (name == "redact") return cmd_redact(o);
    if (name == "eval") return cmd_eval(o);
    if (name == "serve") return cmd_serve(o);
    if (name == "stats") return cmd_stats(o);
  } catch (const anon::IoError& e) {
    std::cerr << "anonctl " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const anon::ProtocolViolation& e) {
    std::cerr << "anonctl " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "anonctl " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const anon::Error& e) {
    std::cerr << "anonctl " << name << ": " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "anonctl " << name << ": " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "anonctl " << name << ": " << e.what() << "\n";
    return 1;
  }
  return 1;
}
