// provenance: command-line front end for the provenance engine.
//
//   provenance ingest        --file F --collection C [--namespace NS] [--label ai|human]
//   provenance classify      (--input F | --vector a,b,... | --image F) [--report out.csv]
//   provenance bench         (--corpus DIR | --synthetic N | --originals F --modified F)
//   provenance gas           --mode uint256|string|both --n N
//   provenance ledger-verify [--ledger FILE]
//   provenance serve         [--bind HOST] [--port P]
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 ledger
// integrity failure.

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <provenance/provenance.hpp>
#include <provenance/service.hpp>

namespace fs = std::filesystem;
using namespace provenance;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kIntegrity = 3 };

struct GlobalOptions {
  std::string config;
  std::string root;
  std::string mode;
  std::string ns;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

EngineConfig resolve(const GlobalOptions& g) {
  EngineConfig cfg;
  if (!g.config.empty()) cfg = load_config(g.config, cfg);
  if (!g.root.empty()) cfg.root = g.root;
  if (!g.mode.empty()) cfg.mode = parse_mode(g.mode);
  if (!g.ns.empty()) cfg.ns = g.ns;
  if (g.seed_opt && g.seed_opt->count()) cfg.seed = g.seed;
  return cfg;
}

std::vector<float> parse_csv_floats(const std::string& s) {
  std::vector<float> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stof(tok));
    } catch (const std::exception&) {
      throw ValidationError("bad vector component '" + tok + "'");
    }
  }
  return out;
}

std::vector<CorpusImage> load_corpus(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<CorpusImage> out;
  for (const auto& f : files) out.push_back({f.filename().string(), read_pnm(f)});
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  fileio::write_atomic(path, text);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding provenance engine: nearest-neighbor AI-image detection with a hash ledger"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--root", g.root, "Data directory (store + ledgers)");
  app.add_option("--mode", g.mode, "Framework mode: hash_only | vector_only | hybrid");
  app.add_option("--namespace", g.ns, "Namespace used for classification (default train)");
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for randomized steps");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Upsert an embedding file into a collection");
  std::string ingest_file, ingest_collection, ingest_ns = "train", ingest_label;
  ingest->add_option("--file", ingest_file, "Embedding file (.emb with .meta sidecar)")->required();
  ingest->add_option("--collection", ingest_collection, "Target collection")->required();
  ingest->add_option("--namespace", ingest_ns, "Target namespace")->capture_default_str();
  ingest->add_option("--label", ingest_label, "Label for a new collection (ai | human)");

  // classify
  auto* classify = app.add_subcommand("classify", "Classify embeddings or an image");
  std::string cls_input, cls_vector, cls_image, cls_report;
  auto* in_opt = classify->add_option("--input", cls_input, "Embedding file to classify");
  auto* vec_opt = classify->add_option("--vector", cls_vector, "Comma-separated components");
  auto* img_opt = classify->add_option("--image", cls_image, "PGM/PPM image (toy embedder)");
  in_opt->excludes(vec_opt)->excludes(img_opt);
  vec_opt->excludes(img_opt);
  classify->add_option("--report", cls_report, "Write a CSV prediction report");

  // bench
  auto* bench = app.add_subcommand("bench", "Perturbation robustness benchmark");
  std::string bench_corpus, bench_originals, bench_modified, bench_out, bench_detail;
  std::size_t bench_synthetic = 0;
  int bench_size = 512;
  std::vector<std::string> bench_specs;
  bench->add_option("--corpus", bench_corpus, "Directory of PGM/PPM images");
  bench->add_option("--synthetic", bench_synthetic, "Generate N synthetic images instead of reading a corpus");
  bench->add_option("--size", bench_size, "Synthetic image side in pixels")->capture_default_str();
  bench->add_option("--originals", bench_originals, "Precomputed embeddings of the originals");
  bench->add_option("--modified", bench_modified, "Precomputed embeddings of variants (ids '<source>#<perturbation>')");
  bench->add_option("--perturbations", bench_specs,
                    "Rows: identity single_patch multi_patch resize blur<p> (default: the seven modifications)")
      ->delimiter(',');
  bench->add_option("--out", bench_out, "Grid CSV (default stdout)");
  bench->add_option("--detail", bench_detail, "Per-item CSV");

  // gas
  auto* gas = app.add_subcommand("gas", "Simulate hash-storage gas usage");
  std::string gas_mode = "both";
  std::uint64_t gas_n = 9000;
  gas->add_option("--storage", gas_mode, "uint256 | string | both")->capture_default_str();
  gas->add_option("--n", gas_n, "Transactions to simulate")->capture_default_str();

  // ledger-verify
  auto* verify = app.add_subcommand("ledger-verify", "Verify ledger hash chains");
  std::vector<std::string> verify_files;
  verify->add_option("--ledger", verify_files, "Ledger file(s); default: both ledgers under --root");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP classification service");
  std::string bind_host = "127.0.0.1";
  int bind_port = 8080;
  serve->add_option("--bind", bind_host, "Bind address")->capture_default_str();
  serve->add_option("--port", bind_port, "Port (0 = any)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gas) {
      std::vector<std::pair<StorageMode, GasSummary>> cols;
      const EngineConfig cfg = resolve(g);
      const std::vector<StorageMode> modes = gas_mode == "both"
                                                 ? std::vector<StorageMode>{StorageMode::Uint256, StorageMode::String}
                                                 : std::vector<StorageMode>{parse_storage_mode(gas_mode)};
      for (auto m : modes) cols.emplace_back(m, simulate_gas(m, gas_n, cfg.gas, cfg.seed).summary);
      std::cout << render_gas_table(cols);
      if (cols.size() == 2)
        std::cerr << "string/uint256 mean ratio: " << cols[1].second.mean / cols[0].second.mean << "\n";
      return kOk;
    }

    if (*bench) {
      const EngineConfig cfg = resolve(g);
      std::vector<GridRow> rows;
      if (!bench_originals.empty() || !bench_modified.empty()) {
        if (bench_originals.empty() || bench_modified.empty())
          throw ValidationError("--originals and --modified must be given together");
        const auto originals = read_embedding_file(bench_originals);
        const auto modified = read_embedding_file(bench_modified);
        rows = grid_from_embeddings(originals, modified);
      } else {
        std::vector<CorpusImage> corpus;
        if (bench_synthetic > 0) corpus = synthetic_corpus(bench_synthetic, cfg.seed, bench_size);
        else if (!bench_corpus.empty()) corpus = load_corpus(bench_corpus);
        else throw ValidationError("bench needs --corpus, --synthetic or --originals/--modified");
        std::vector<PerturbationSpec> specs;
        for (const auto& s : bench_specs) specs.push_back(parse_perturbation(s));
        if (specs.empty()) specs = default_perturbations();
        rows = run_perturbation_grid(corpus, specs, cfg.seed);
      }
      write_text(bench_out, render_grid(rows));
      if (!bench_detail.empty()) write_text(bench_detail, render_grid_detail(rows));
      return kOk;
    }

    if (*verify) {
      const EngineConfig cfg = resolve(g);
      std::vector<fs::path> files(verify_files.begin(), verify_files.end());
      if (files.empty()) files = {cfg.root / "ledger" / "ai.lgr", cfg.root / "ledger" / "human.lgr"};
      bool all_ok = true;
      for (const auto& f : files) {
        const ChainReport r = verify_chain(f);
        nlohmann::json j{{"ledger", f.string()}, {"ok", r.ok}, {"entries", r.entries}, {"name", r.name}};
        if (r.first_bad_index) j["first_bad_index"] = *r.first_bad_index;
        if (!r.reason.empty()) j["reason"] = r.reason;
        std::cout << j.dump() << "\n";
        all_ok = all_ok && r.ok;
      }
      return all_ok ? kOk : kIntegrity;
    }

    Engine engine(resolve(g));

    if (*ingest) {
      std::optional<Label> label;
      if (!ingest_label.empty()) label = parse_label(ingest_label);
      const IngestResult r = engine.ingest(ingest_file, ingest_collection, ingest_ns, label);
      std::cout << nlohmann::json{{"count", r.count},
                                  {"replaced", r.replaced},
                                  {"ledger_appended", r.ledger_appended},
                                  {"gas", r.gas}}
                       .dump()
                << "\n";
      if (r.replaced) std::cerr << r.replaced << " duplicate id(s) replaced\n";
      return kOk;
    }

    if (*classify) {
      std::vector<Record> inputs;
      if (!cls_input.empty()) inputs = read_embedding_file(cls_input);
      else if (!cls_vector.empty()) inputs.push_back({{"vector", "vector", Label::AI, "query"}, EmbeddingVector(parse_csv_floats(cls_vector))});
      else if (!cls_image.empty()) {
        const fs::path p(cls_image);
        inputs.push_back({{p.filename().string(), p.filename().string(), Label::AI, "query"}, toy_embed(read_pnm(p))});
      } else throw ValidationError("classify needs --input, --vector or --image");

      std::vector<PredictionRecord> report;
      ConfusionMatrix cm;
      for (const auto& rec : inputs) {
        const ClassifyResponse r = engine.classify(rec.vector);
        nlohmann::json j = to_json(r);
        j["id"] = rec.meta.id;
        std::cout << j.dump() << "\n";
        if (!cls_report.empty() && engine.mode() != FrameworkMode::HashOnly) {
          std::optional<Label> truth;
          if (!cls_input.empty()) truth = rec.meta.label;
          report.push_back(to_prediction_record(r, rec.meta.source_name, truth));
          if (truth) cm.add(*truth, report.back().predicted_label);
        }
      }
      if (!cls_report.empty()) {
        if (engine.mode() == FrameworkMode::HashOnly) throw ValidationError("--report needs similarity scores (not hash_only)");
        write_report(report, cls_report);
        if (cm.total() > 0) {
          const auto m = summarize(cm);
          auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("undefined"); };
          std::cerr << "tp=" << cm.tp << " fp=" << cm.fp << " tn=" << cm.tn << " fn=" << cm.fn
                    << " precision=" << show(m.precision) << " recall=" << show(m.recall)
                    << " accuracy=" << show(m.accuracy) << "\n";
        }
      }
      return kOk;
    }

    if (*serve) {
      Service service(engine);
      const int port = service.bind(bind_host, bind_port);
      if (port < 0) {
        std::cerr << "cannot bind " << bind_host << ":" << bind_port << "\n";
        return kData;
      }
      std::cerr << "listening on " << bind_host << ":" << port << " (" << to_string(engine.mode()) << ")\n";
      service.serve();
      return kOk;
    }
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kIntegrity;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
