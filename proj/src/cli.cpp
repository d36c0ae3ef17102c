#include "rescnn/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "rescnn/checkpoint.hpp"
#include "rescnn/dataset.hpp"
#include "rescnn/diagnostics.hpp"
#include "rescnn/embeddings.hpp"
#include "rescnn/errors.hpp"
#include "rescnn/evaluation.hpp"
#include "rescnn/model.hpp"
#include "rescnn/training.hpp"

namespace fs = std::filesystem;

namespace rescnn {
namespace {

struct SynthFlags {
  std::string out;
  SynthConfig cfg;
};

struct TrainFlags {
  std::string train;
  std::string embeddings;
  std::string relations;
  std::string out;
  std::string variant = "rescnn_x";
  std::size_t conv_layers = 9;
  std::size_t h = 3;
  std::size_t m = 128;
  std::size_t fc_hidden = 0;  // 0: same as m
  std::size_t dw = 50;
  std::size_t dp = 5;
  int emin = -30;
  int emax = 30;
  std::size_t n = 100;
  std::size_t batch = 64;
  double lr = 0.001;
  std::size_t epochs = 10;
  double keep_prob = 0.5;
  std::uint64_t seed = 1;
  double holdout = 0.0;
  std::size_t eval_every = 0;
};

struct EvalFlags {
  std::string checkpoint;
  std::string test;
  std::string out;
  std::string pan = "100,200,300";
};

struct GradcheckFlags {
  std::uint64_t seed = 7;
  double eps = 1e-5;
  double tol = 1e-4;
  std::string out;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const KeyValues& flags) {
  fs::create_directories(dir);
  auto out = open_output(dir / "manifest.txt");
  out << "command=" << command << '\n';
  flags.write(out);
}

void add_flag(KeyValues& kv, const std::string& key, const std::string& value) {
  if (!value.empty()) kv.add(key, value);
}

std::vector<std::size_t> parse_ns(const std::string& text) {
  std::vector<std::size_t> ns;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    long long v = 0;
    try {
      std::size_t used = 0;
      v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--pan: malformed N '" + item + "'");
    }
    if (v <= 0) throw ConfigError("--pan: N must be positive, got " + item);
    ns.push_back(static_cast<std::size_t>(v));
  }
  if (ns.empty()) throw ConfigError("--pan: no N values given");
  return ns;
}

// ---- synth -----------------------------------------------------------------

KeyValues synth_manifest(const SynthFlags& f) {
  KeyValues kv;
  const auto& c = f.cfg;
  add_flag(kv, "out", f.out);
  kv.add("num-relations", std::to_string(c.relations));
  kv.add("vocab-size", std::to_string(c.vocab_size));
  kv.add("triggers", std::to_string(c.triggers_per_relation));
  kv.add("min-len", std::to_string(c.min_length));
  kv.add("max-len", std::to_string(c.max_length));
  kv.add("q", format_double(c.noise));
  kv.add("na-frac", format_double(c.na_fraction));
  kv.add("n-train", std::to_string(c.train_instances));
  kv.add("n-test", std::to_string(c.test_instances));
  kv.add("max-support", std::to_string(c.max_support));
  kv.add("seed", std::to_string(c.seed));
  return kv;
}

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  f.cfg.validate();
  const fs::path dir(f.out);
  write_manifest(dir, "synth", synth_manifest(f));
  const SynthCorpus corpus = synth_generate(f.cfg);
  {
    auto o = open_output(dir / "train.jsonl");
    write_corpus(o, corpus.train);
  }
  {
    auto o = open_output(dir / "test.jsonl");
    write_corpus(o, corpus.test);
  }
  {
    auto o = open_output(dir / "gold.csv");
    write_gold_csv(o, corpus.gold, corpus.schema);
  }
  {
    auto o = open_output(dir / "relations.txt");
    write_relations(o, corpus.schema);
  }
  out << "wrote " << corpus.train.size() << " train / " << corpus.test.size() << " test instances, "
      << corpus.gold.size() << " gold facts to " << dir.string() << '\n';
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

KeyValues train_manifest(const TrainFlags& f) {
  KeyValues kv;
  add_flag(kv, "train", f.train);
  add_flag(kv, "embeddings", f.embeddings);
  add_flag(kv, "relations", f.relations);
  add_flag(kv, "out", f.out);
  kv.add("variant", f.variant);
  kv.add("conv-layers", std::to_string(f.conv_layers));
  kv.add("h", std::to_string(f.h));
  kv.add("m", std::to_string(f.m));
  kv.add("fc-hidden", std::to_string(f.fc_hidden == 0 ? f.m : f.fc_hidden));
  kv.add("dw", std::to_string(f.dw));
  kv.add("dp", std::to_string(f.dp));
  kv.add("emin", std::to_string(f.emin));
  kv.add("emax", std::to_string(f.emax));
  kv.add("n", std::to_string(f.n));
  kv.add("batch", std::to_string(f.batch));
  kv.add("lr", format_double(f.lr));
  kv.add("epochs", std::to_string(f.epochs));
  kv.add("keep-prob", format_double(f.keep_prob));
  kv.add("seed", std::to_string(f.seed));
  kv.add("holdout", format_double(f.holdout));
  kv.add("eval-every", std::to_string(f.eval_every));
  return kv;
}

ModelConfig model_config_from_flags(const TrainFlags& f, std::size_t relations) {
  const auto variant = parse_variant(f.variant);
  if (!variant) throw ConfigError("--variant must be one of cnn_b, cnn, cnn_x, rescnn_x");
  const EmbeddingConfig emb{f.dw, f.dp, f.emin, f.emax, f.n};
  ModelConfig cfg = make_model_config(*variant, f.conv_layers, relations, f.h, f.m, emb, f.keep_prob);
  if (f.fc_hidden != 0 && cfg.fc_widths.size() > 1) {
    for (std::size_t i = 0; i + 1 < cfg.fc_widths.size(); ++i) cfg.fc_widths[i] = f.fc_hidden;
  }
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainFlags& f, std::ostream& out) {
  // Validate everything that does not need data before touching the disk.
  model_config_from_flags(f, 2);
  TrainConfig tc;
  tc.batch_size = f.batch;
  tc.learning_rate = f.lr;
  tc.epochs = f.epochs;
  tc.seed = f.seed;
  tc.eval_every = f.eval_every;
  tc.holdout_fraction = f.holdout;
  tc.validate();

  const fs::path dir(f.out);
  write_manifest(dir, "train", train_manifest(f));

  std::vector<CorpusInstance> corpus;
  RelationSchema schema;
  if (!f.relations.empty()) {
    auto rin = open_input(f.relations);
    schema = read_relations(rin);
    auto in = open_input(f.train);
    corpus = load_corpus(in, &schema);
  } else {
    auto in = open_input(f.train);
    corpus = load_corpus(in);
    schema = RelationSchema::infer(corpus);
  }
  if (corpus.empty()) throw DataError("training corpus " + f.train + " is empty");

  const ModelConfig cfg = model_config_from_flags(f, schema.size());
  Vocabulary vocab;
  Tensor word_table;
  if (!f.embeddings.empty()) {
    auto in = open_input(f.embeddings);
    auto loaded = load_embeddings(in, f.dw);
    vocab = std::move(loaded.vocab);
    word_table = std::move(loaded.table);
  } else {
    for (const auto& inst : corpus) {
      for (const auto& tok : inst.tokens) vocab.add(tok);
    }
    Rng rng(mix_seed(f.seed, fnv1a("word")));
    word_table = random_word_table(vocab, f.dw, rng);
  }

  const EncodedCorpus encoded = encode_corpus(corpus, schema, vocab, cfg.embedding);
  if (encoded.instances.empty()) throw DataError("no training instance fits the padded length");
  out << "encoded " << encoded.instances.size() << " instances (" << encoded.rejected
      << " rejected), vocabulary " << vocab.size() << ", relations " << schema.size() << '\n';

  Model model(cfg, f.seed, std::move(word_table));
  const TrainLog log = train(model, encoded.instances, tc);

  save_checkpoint(dir / "checkpoint.bin", model, schema, vocab);
  {
    auto o = open_output(dir / "trainlog.csv");
    log.write_csv(o);
  }
  if (!log.evals.empty()) {
    auto o = open_output(dir / "evallog.csv");
    o << "step,metric,value\n";
    for (const auto& e : log.evals) {
      for (const auto& [name, value] : e.metrics) o << e.step << ',' << name << ',' << format_double(value) << '\n';
    }
  }
  out << "trained " << variant_name(cfg.variant) << " (" << cfg.conv_layers << " conv layers) for "
      << log.steps.size() << " steps, final batch loss " << log.steps.back().loss << '\n';
  return kExitOk;
}

// ---- eval ------------------------------------------------------------------

KeyValues eval_manifest(const EvalFlags& f) {
  KeyValues kv;
  add_flag(kv, "checkpoint", f.checkpoint);
  add_flag(kv, "test", f.test);
  add_flag(kv, "out", f.out);
  kv.add("pan", f.pan);
  return kv;
}

int cmd_eval(EvalFlags f, std::ostream& out) {
  const auto ns = parse_ns(f.pan);
  if (f.out.empty()) f.out = (fs::path(f.checkpoint).parent_path() / "eval").string();
  if (!fs::exists(f.checkpoint)) throw DataError("checkpoint not found: " + f.checkpoint);

  const fs::path dir(f.out);
  write_manifest(dir, "eval", eval_manifest(f));

  LoadedCheckpoint ckpt = load_checkpoint(f.checkpoint);
  auto in = open_input(f.test);
  const auto corpus = load_corpus(in, &ckpt.schema);
  const EncodedCorpus encoded = encode_corpus(corpus, ckpt.schema, ckpt.vocab, ckpt.model.config().embedding);
  const FactSet gold = gold_facts(corpus, ckpt.schema);
  const auto ranked = collect_predictions(ckpt.model, encoded.instances);
  const EvalReport report = evaluate_ranking(ranked, gold, ns);

  {
    auto o = open_output(dir / "pr.csv");
    write_pr_csv(o, report);
  }
  {
    auto o = open_output(dir / "pan.csv");
    write_pan_csv(o, report);
  }

  out << "gold facts " << report.gold_count << ", ranked predictions " << report.prediction_count
      << ", rejected instances " << encoded.rejected << '\n';
  out << "P@N(%)";
  for (const auto& v : report.p_at.values) out << std::setw(8) << v.n;
  out << std::setw(8) << "Mean" << '\n' << "      ";
  out << std::fixed << std::setprecision(1);
  for (const auto& v : report.p_at.values) out << std::setw(7) << 100.0 * v.precision << (v.truncated ? "*" : " ");
  out << std::setw(8) << 100.0 * report.p_at.mean << '\n';
  out << std::defaultfloat;
  for (const auto& v : report.p_at.values) {
    if (v.truncated) {
      out << "* fewer than " << v.n << " predictions; precision over all " << report.prediction_count << '\n';
      break;
    }
  }
  return kExitOk;
}

// ---- gradcheck -------------------------------------------------------------

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out) {
  if (!(f.eps > 0.0)) throw ConfigError("--eps must be positive");
  if (!f.out.empty()) {
    KeyValues kv;
    kv.add("seed", std::to_string(f.seed));
    kv.add("eps", format_double(f.eps));
    kv.add("tol", format_double(f.tol));
    kv.add("out", f.out);
    write_manifest(f.out, "gradcheck", kv);
  }
  std::ostringstream report;
  bool ok = true;
  for (Variant v : {Variant::ResCnnX, Variant::CnnX}) {
    ToyGradcheck options;
    options.variant = v;
    options.seed = f.seed;
    options.eps = f.eps;
    const GradcheckReport r = gradcheck_toy_model(options);
    const bool pass = r.passed(f.tol);
    ok = ok && pass;
    report << variant_name(v) << "-9 max relative error " << std::scientific << std::setprecision(3)
           << r.max_rel_error << (pass ? "  PASS" : "  FAIL") << '\n';
    for (const auto& p : r.parameters) {
      report << "  " << std::left << std::setw(22) << p.name << std::right << std::setw(5)
             << p.coordinates << "  " << p.max_rel_error << '\n';
    }
    report << std::defaultfloat;
  }
  out << report.str();
  if (!f.out.empty()) {
    auto o = open_output(fs::path(f.out) / "gradcheck.txt");
    o << report.str();
  }
  return ok ? kExitOk : kExitNumerical;
}

// ---- manifest replay -------------------------------------------------------

std::vector<std::string> expand_manifest(std::span<const std::string> args) {
  std::vector<std::string> rest;
  std::string manifest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--manifest") {
      if (i + 1 >= args.size()) throw ConfigError("--manifest needs a file");
      manifest = args[++i];
    } else if (args[i].starts_with("--manifest=")) {
      manifest = args[i].substr(11);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (manifest.empty()) return rest;

  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + manifest);
  const KeyValues kv = KeyValues::read(in);
  const std::string& command = kv.get("command");
  if (!(rest.empty() || (rest.size() == 1 && rest[0] == command))) {
    throw ConfigError("--manifest replays '" + command + "' and takes no other arguments");
  }
  std::vector<std::string> expanded{command};
  for (const auto& [k, v] : kv.entries()) {
    if (k != "command") expanded.push_back("--" + k + "=" + v);
  }
  return expanded;
}

}  // namespace

int run_cli(std::span<const std::string> raw_args, std::ostream& out, std::ostream& err) {
  try {
    const std::vector<std::string> args = expand_manifest(raw_args);

    CLI::App app{"Residual CNN relation extraction: synthetic data, training, held-out evaluation"};
    app.require_subcommand(1);

    SynthFlags synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic distant-supervision corpus");
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--num-relations", synth.cfg.relations, "Non-NA relation count");
    s->add_option("--vocab-size", synth.cfg.vocab_size, "Filler vocabulary size");
    s->add_option("--triggers", synth.cfg.triggers_per_relation, "Trigger tokens per relation");
    s->add_option("--min-len", synth.cfg.min_length, "Minimum sentence length");
    s->add_option("--max-len", synth.cfg.max_length, "Maximum sentence length");
    s->add_option("--q", synth.cfg.noise, "Label-flip rate for training sentences");
    s->add_option("--na-frac", synth.cfg.na_fraction, "Fraction of NA entity pairs");
    s->add_option("--n-train", synth.cfg.train_instances, "Training sentences");
    s->add_option("--n-test", synth.cfg.test_instances, "Test sentences");
    s->add_option("--max-support", synth.cfg.max_support, "Maximum sentences per entity pair");
    s->add_option("--seed", synth.cfg.seed, "Random seed");

    TrainFlags tf;
    auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
    t->set_help_flag("--help", "Print this help message and exit");  // -h is taken by the window size
    t->add_option("--train", tf.train, "Training corpus (JSON lines)")->required();
    t->add_option("--out", tf.out, "Output directory")->required();
    t->add_option("--embeddings", tf.embeddings, "Pretrained word vectors (text format)");
    t->add_option("--relations", tf.relations, "Relation labels, one per line");
    t->add_option("--variant", tf.variant, "cnn_b | cnn | cnn_x | rescnn_x");
    t->add_option("--conv-layers", tf.conv_layers, "Convolutional layers (odd)");
    t->add_option("--h", tf.h, "Window size");
    t->add_option("--m", tf.m, "Filter count");
    t->add_option("--fc-hidden", tf.fc_hidden, "Hidden fully connected width (default m)");
    t->add_option("--dw", tf.dw, "Word embedding dimension");
    t->add_option("--dp", tf.dp, "Position embedding dimension");
    t->add_option("--emin", tf.emin, "Minimum relative distance");
    t->add_option("--emax", tf.emax, "Maximum relative distance");
    t->add_option("--n", tf.n, "Padded sentence length");
    t->add_option("--batch", tf.batch, "Mini-batch size");
    t->add_option("--lr", tf.lr, "Adam learning rate");
    t->add_option("--epochs", tf.epochs, "Training epochs");
    t->add_option("--keep-prob", tf.keep_prob, "Dropout keep probability");
    t->add_option("--seed", tf.seed, "Random seed");
    t->add_option("--holdout", tf.holdout, "Fraction held out for validation loss");
    t->add_option("--eval-every", tf.eval_every, "Validation interval in steps (0: per epoch)");

    EvalFlags ef;
    auto* e = app.add_subcommand("eval", "Held-out evaluation of a checkpoint");
    e->add_option("--checkpoint", ef.checkpoint, "checkpoint.bin written by train")->required();
    e->add_option("--test", ef.test, "Test corpus (JSON lines)")->required();
    e->add_option("--out", ef.out, "Output directory (default: <checkpoint dir>/eval)");
    e->add_option("--pan", ef.pan, "Comma-separated N values for P@N");

    GradcheckFlags gf;
    auto* g = app.add_subcommand("gradcheck", "Finite-difference check of toy ResCNN-9 and CNN-9");
    g->add_option("--seed", gf.seed, "Random seed");
    g->add_option("--eps", gf.eps, "Central difference step");
    g->add_option("--tol", gf.tol, "Maximum relative error");
    g->add_option("--out", gf.out, "Optional output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& pe) {
      const int code = app.exit(pe, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }

    if (s->parsed()) return cmd_synth(synth, out);
    if (t->parsed()) return cmd_train(tf, out);
    if (e->parsed()) return cmd_eval(ef, out);
    if (g->parsed()) return cmd_gradcheck(gf, out);
    return kExitUsage;
  } catch (const ConfigError& ex) {
    err << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& ex) {
    err << "numerical failure: " << ex.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitData;
  }
}

}  // namespace rescnn
