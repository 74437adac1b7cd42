// Command-line entry points: gen-data, pretrain, finetune, eval, exec.
//
// Exit codes: 0 success, 1 usage or parse error, 2 I/O error (including
// unreadable checkpoints), 3 numeric or generation failure.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plad/errors.hpp"
#include "plad/executor.hpp"
#include "plad/grid.hpp"
#include "plad/io.hpp"
#include "plad/nn/checkpoint.hpp"
#include "plad/parallel.hpp"
#include "plad/synth.hpp"
#include "plad/trainer.hpp"

namespace fs = std::filesystem;
using namespace plad;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kIo = 2, kNumeric = 3 };

std::shared_ptr<const Vocabulary> load_vocab(DslId dsl, const std::string& name) {
    if (name.empty() || name == "standard") return std::make_shared<const Vocabulary>(Vocabulary::standard(dsl));
    if (name == "mini" || name == "full") {
        if (dsl != DslId::Csg2d) throw UsageError("vocabulary '" + name + "' exists only for csg2d");
        return std::make_shared<const Vocabulary>(name == "mini" ? Vocabulary::csg2d_mini() : Vocabulary::csg2d_full());
    }
    if (!fs::exists(name)) throw MissingInput("vocabulary file not found: " + name);
    return std::make_shared<const Vocabulary>(Vocabulary::from_file(dsl, name));
}

nn::RecognitionModel load_recognition(const fs::path& path) {
    if (!fs::exists(path)) throw MissingInput("checkpoint not found: " + path.string());
    return nn::load_model(path);
}

void echo_config(const CLI::App& cmd, const fs::path& out) {
    fs::create_directories(out);
    std::ofstream f(out / "config.ini", std::ios::trunc);
    if (!f) throw IoError("cannot write " + (out / "config.ini").string());
    f << cmd.config_to_str(true, false);
}

void add_config(CLI::App* cmd) {
    // Expanded by expand_config before parsing; declared here for --help.
    cmd->add_option("--config", "key=value settings file; command-line flags take precedence");
}

std::string option_name(const std::string& arg) {
    const auto eq = arg.find('=');
    return arg.substr(0, eq);
}

// Replaces `--config FILE` with one `--key=value` argument per setting that
// the command line does not already give. Unknown keys then fail as unknown
// options.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    std::vector<std::string> given;
    std::optional<std::string> file;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file");
            file = args[++i];
            continue;
        }
        if (a.rfind("--config=", 0) == 0) {
            file = a.substr(9);
            continue;
        }
        if (a.rfind("--", 0) == 0) given.push_back(option_name(a));
        out.push_back(a);
    }
    if (!file) return out;
    auto unquote = [](std::string v) {
        const auto b = v.find_first_not_of(' ');
        const auto e = v.find_last_not_of(' ');
        v = b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
        return v;
    };
    for (auto [key, value] : read_settings(*file)) {
        if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
            // List written by the config echo: ["a", "b"] becomes a,b.
            std::string joined, item;
            std::stringstream items(value.substr(1, value.size() - 2));
            while (std::getline(items, item, ',')) joined += (joined.empty() ? "" : ",") + unquote(item);
            value = joined;
        }
        value = unquote(value);
        if (value.empty()) continue;  // unset in the echoed file
        const std::string flag = "--" + key;
        if (std::find(given.begin(), given.end(), flag) != given.end()) continue;
        out.push_back(flag + "=" + value);
    }
    return out;
}

// --- gen-data ----------------------------------------------------------------

struct GenArgs {
    std::string dsl;
    std::string vocab = "standard";
    int count = 0;
    int val_count = 0;
    std::uint64_t seed = 0;
    int k_min = 0;
    int k_max = 0;
    bool require_overlap = false;
    std::string out;
};

void setup_gen(CLI::App& app, GenArgs& a) {
    auto* c = app.add_subcommand("gen-data", "Sample synthetic (shape, program) pairs");
    add_config(c);
    c->add_option("--dsl", a.dsl, "csg2d, csg3d or shapeassembly")->required();
    c->add_option("--count", a.count, "training pairs (>= 1)")->required();
    c->add_option("--val-count", a.val_count, "validation pairs with unseen program text");
    c->add_option("--seed", a.seed, "generator seed");
    c->add_option("--vocab", a.vocab, "standard, mini, full (csg2d) or a vocabulary file");
    c->add_option("--k-min", a.k_min, "fewest primitives (0: DSL default)");
    c->add_option("--k-max", a.k_max, "most primitives (0: DSL default)");
    c->add_flag("--require-overlap", a.require_overlap, "csg2d: every primitive touches an earlier one");
    c->add_option("--out", a.out, "output dataset directory")->required();
}

int run_gen(const CLI::App& cmd, const GenArgs& a) {
    if (a.count < 1) throw UsageError("--count must be >= 1");
    if (a.val_count < 0) throw UsageError("--val-count must be >= 0");
    const DslId dsl = parse_dsl(a.dsl);
    const auto vocab = load_vocab(dsl, a.vocab);
    GenConfig g = GenConfig::defaults(dsl);
    g.seed = a.seed;
    g.count = a.count;
    g.val_count = a.val_count;
    if (a.k_min > 0) g.k_min = a.k_min;
    if (a.k_max > 0) g.k_max = a.k_max;
    if (g.k_min > g.k_max) throw UsageError("--k-min exceeds --k-max");
    g.require_overlap = a.require_overlap;
    const Dataset data = generate_dataset(vocab, g, default_threads());
    const Settings meta{{"dsl", std::string(to_string(dsl))},
                        {"seed", std::to_string(a.seed)},
                        {"count", std::to_string(a.count)},
                        {"val_count", std::to_string(data.val.size())},
                        {"k_min", std::to_string(g.k_min)},
                        {"k_max", std::to_string(g.k_max)},
                        {"vocab", a.vocab},
                        {"require_overlap", a.require_overlap ? "1" : "0"}};
    write_dataset(a.out, *vocab, data, meta);
    echo_config(cmd, a.out);
    std::cout << "wrote " << data.train.size() << " training and " << data.val.size() << " validation pairs to "
              << a.out << '\n';
    return kOk;
}

// --- pretrain ----------------------------------------------------------------

struct ModelArgs {
    std::string preset = "default";
    int width = 0, layers = -1, heads = 0, ffn = 0, max_len = 0;
    double dropout = -1.0;
    std::string convs;
};

void add_model_options(CLI::App* c, ModelArgs& m) {
    c->add_option("--preset", m.preset, "model size: default, mini or tiny");
    c->add_option("--width", m.width, "override the preset width (0 keeps it)");
    c->add_option("--layers", m.layers, "decoder blocks (-1 keeps the preset)");
    c->add_option("--heads", m.heads, "attention heads (0 keeps the preset)");
    c->add_option("--ffn", m.ffn, "feed-forward width (0 keeps the preset)");
    c->add_option("--max-len", m.max_len, "longest program in tokens (0 keeps the preset)");
    c->add_option("--dropout", m.dropout, "dropout rate (-1 keeps the preset)");
    c->add_option("--convs", m.convs, "encoder stack such as k4s4c16,k2s2c32");
}

nn::ModelConfig model_config(const ModelArgs& m, DslId dsl) {
    auto pairs = nn::ModelConfig::preset(m.preset, dsl).to_pairs();
    auto set = [&](const std::string& key, const std::string& value) {
        for (auto& kv : pairs) {
            if (kv.first == key) kv.second = value;
        }
    };
    if (m.width > 0) set("width", std::to_string(m.width));
    if (m.layers >= 0) set("layers", std::to_string(m.layers));
    if (m.heads > 0) set("heads", std::to_string(m.heads));
    if (m.ffn > 0) set("ffn", std::to_string(m.ffn));
    if (m.max_len > 0) set("max_len", std::to_string(m.max_len));
    if (m.dropout >= 0.0) set("dropout", std::to_string(m.dropout));
    if (!m.convs.empty()) set("convs", m.convs);
    return nn::ModelConfig::from_pairs(pairs);
}

struct PretrainArgs {
    std::string data, out, init;
    ModelArgs model;
    int epochs = 100, patience = 10, batch_size = 100, beam_val = 3, val_count = 100;
    double lr = 1e-3, threshold = -1.0;
    std::uint64_t seed = 0;
    bool no_wallclock = false;
};

void setup_pretrain(CLI::App& app, PretrainArgs& a) {
    auto* c = app.add_subcommand("pretrain", "Supervised training on a synthetic dataset");
    add_config(c);
    c->add_option("--data", a.data, "dataset directory from gen-data (needs a validation slice)")->required();
    c->add_option("--out", a.out, "output directory")->required();
    c->add_option("--init", a.init, "continue from this checkpoint instead of a fresh model");
    add_model_options(c, a.model);
    c->add_option("--epochs", a.epochs, "epoch cap");
    c->add_option("--patience", a.patience, "epochs without improvement before stopping");
    c->add_option("--threshold", a.threshold, "improvement that resets patience (-1: 0.005 CD / 0.001 IoU)");
    c->add_option("--batch-size", a.batch_size, "pairs per batch");
    c->add_option("--lr", a.lr, "Adam learning rate");
    c->add_option("--beam-val", a.beam_val, "beam for validation reconstruction");
    c->add_option("--val-count", a.val_count, "validation shapes used (0: all)");
    c->add_option("--seed", a.seed, "initialization and shuffling seed");
    c->add_flag("--no-wallclock", a.no_wallclock, "write 0 in the trace wallclock column");
}

double default_threshold(DslId dsl) { return dsl == DslId::Csg2d ? 0.005 : 0.001; }

int run_pretrain(const CLI::App& cmd, const PretrainArgs& a) {
    const StoredDataset ds = read_dataset(a.data);
    if (ds.data.val.empty()) throw UsageError("dataset has no validation slice; regenerate with --val-count");
    const DslId dsl = ds.vocab->dsl();
    std::optional<nn::RecognitionModel> model;
    if (!a.init.empty()) {
        model.emplace(load_recognition(a.init));
        if (!(model->vocab() == *ds.vocab)) throw UsageError("--init checkpoint uses a different vocabulary");
    } else {
        model.emplace(ds.vocab, model_config(a.model, dsl), a.seed);
    }
    std::vector<ShapeGrid> val;
    for (const auto& p : ds.data.val) {
        if (a.val_count > 0 && static_cast<int>(val.size()) >= a.val_count) break;
        val.push_back(p.shape);
    }
    PretrainConfig cfg;
    cfg.batch_size = a.batch_size;
    cfg.lr = a.lr;
    cfg.max_epochs = a.epochs;
    cfg.patience = a.patience;
    cfg.threshold = a.threshold >= 0.0 ? a.threshold : default_threshold(dsl);
    cfg.beam_val = a.beam_val;
    cfg.seed = a.seed;
    cfg.threads = default_threads();
    cfg.out_dir = a.out;
    cfg.record_wallclock = !a.no_wallclock;
    echo_config(cmd, a.out);
    const Executor exec(ds.vocab);
    const TrainResult r = pretrain(std::move(*model), ds.data.train, val, cfg, exec);
    nn::save_model(r.model, fs::path(a.out) / "model.pladckpt");
    std::printf("best validation similarity %.6f after %zu epochs\n", r.best_val, r.trace.size() - 1);
    return kOk;
}

// --- finetune ------------------------------------------------------------------

struct FinetuneArgs {
    std::string model, targets, val, out;
    std::vector<std::string> methods{"lest", "st"};
    std::string pbest_mode = "alltime", mixing = "uniform";
    int beam_inner = 10, beam_val_inround = 3, beam_val_between = 5, beam_final = 10;
    int batch_size = 100, round_patience = 10, max_round_epochs = 100, outer_patience = 0, max_rounds = 50;
    double lr = -1.0, threshold = -1.0;
    int rl_batch = 16, rl_update_every = 10, rl_max_epochs = 1000;
    double rl_lr = 0.01;
    int vae_epochs = 100, vae_patience = 10;
    double vae_lr = 1e-3;
    bool vae_fresh = false;
    double max_seconds = 0.0;
    std::uint64_t seed = 0;
    bool no_wallclock = false;
};

void setup_finetune(CLI::App& app, FinetuneArgs& a) {
    auto* c = app.add_subcommand("finetune", "Fine-tune a pretrained model on target shapes");
    add_config(c);
    c->add_option("--model", a.model, "pretrained checkpoint")->required();
    c->add_option("--targets", a.targets, "target shapes: dataset directory or PLADGRID file")->required();
    c->add_option("--val", a.val, "validation shapes (default: the validation slice of --targets)");
    c->add_option("--out", a.out, "output directory")->required();
    c->add_option("--methods", a.methods, "any of st,lest,ws, or rl alone")->delimiter(',');
    c->add_option("--pbest-mode", a.pbest_mode, "alltime or perround");
    c->add_option("--mixing", a.mixing, "uniform or proportional batch mixing");
    c->add_option("--beam-inner", a.beam_inner, "beam for best-program updates");
    c->add_option("--beam-val-inround", a.beam_val_inround, "validation beam within a round");
    c->add_option("--beam-val-between", a.beam_val_between, "validation beam between rounds");
    c->add_option("--beam-final", a.beam_final, "beam for the final validation report");
    c->add_option("--batch-size", a.batch_size, "pairs per batch");
    c->add_option("--lr", a.lr, "Adam learning rate (-1: 1e-3 for 2D, 5e-4 for 3D)");
    c->add_option("--round-patience", a.round_patience, "epochs without improvement that end a round");
    c->add_option("--max-round-epochs", a.max_round_epochs, "epoch cap per round");
    c->add_option("--outer-patience", a.outer_patience, "epochs without improvement that end training (0: 1000 for 2D, 100 for 3D)");
    c->add_option("--threshold", a.threshold, "improvement that resets patience (-1: 0.005 CD / 0.001 IoU)");
    c->add_option("--max-rounds", a.max_rounds, "round cap");
    c->add_option("--rl-batch", a.rl_batch, "shapes per REINFORCE batch");
    c->add_option("--rl-update-every", a.rl_update_every, "batches per SGD update");
    c->add_option("--rl-lr", a.rl_lr, "SGD learning rate for REINFORCE");
    c->add_option("--rl-max-epochs", a.rl_max_epochs, "epoch cap for REINFORCE");
    c->add_option("--vae-epochs", a.vae_epochs, "epoch cap per VAE training");
    c->add_option("--vae-patience", a.vae_patience, "VAE early-stopping patience");
    c->add_option("--vae-lr", a.vae_lr, "VAE learning rate");
    c->add_flag("--vae-fresh", a.vae_fresh, "re-initialize the VAE every round instead of continuing");
    c->add_option("--max-seconds", a.max_seconds, "wall-clock cap (0: none)");
    c->add_option("--seed", a.seed, "seed for mixing, dropout and sampling");
    c->add_flag("--no-wallclock", a.no_wallclock, "write 0 in the trace wallclock column");
}

int run_finetune(const CLI::App& cmd, const FinetuneArgs& a) {
    bool rl = false;
    std::vector<Method> methods;
    for (const auto& m : a.methods) {
        if (m == "rl" || m == "RL") {
            rl = true;
        } else {
            methods.push_back(parse_method(m));
        }
    }
    if (rl && !methods.empty()) throw UsageError("--methods rl cannot be combined with st, lest or ws");
    nn::RecognitionModel model = load_recognition(a.model);
    const DslId dsl = model.vocab().dsl();
    const auto targets = read_shape_set(a.targets);
    const auto val = a.val.empty() ? read_shape_set(a.targets, true) : read_shape_set(a.val);

    TrainConfig cfg = TrainConfig::defaults(dsl);
    if (!rl) cfg.methods = methods;
    cfg.pbest_mode = parse_pbest_mode(a.pbest_mode);
    cfg.mixing = parse_mixing(a.mixing);
    cfg.beam_inner = a.beam_inner;
    cfg.beam_val_inround = a.beam_val_inround;
    cfg.beam_val_between = a.beam_val_between;
    cfg.beam_final = a.beam_final;
    cfg.batch_size = a.batch_size;
    if (a.lr >= 0.0) cfg.lr = a.lr;
    cfg.round_patience = a.round_patience;
    cfg.max_round_epochs = a.max_round_epochs;
    if (a.outer_patience > 0) cfg.outer_patience = a.outer_patience;
    if (a.threshold >= 0.0) cfg.patience_threshold = a.threshold;
    cfg.max_rounds = a.max_rounds;
    cfg.rl_batch = a.rl_batch;
    cfg.rl_update_every = a.rl_update_every;
    cfg.rl_lr = a.rl_lr;
    cfg.rl_max_epochs = a.rl_max_epochs;
    cfg.vae.max_epochs = a.vae_epochs;
    cfg.vae.patience = a.vae_patience;
    cfg.vae.lr = a.vae_lr;
    cfg.vae_fresh = a.vae_fresh;
    cfg.max_seconds = a.max_seconds;
    cfg.seed = a.seed;
    cfg.threads = default_threads();
    cfg.out_dir = a.out;
    cfg.record_wallclock = !a.no_wallclock;
    cfg.check();
    echo_config(cmd, a.out);

    const Executor exec(model.vocab_ptr());
    const TrainResult r = rl ? fine_tune_rl(std::move(model), targets, val, cfg, exec)
                             : fine_tune(std::move(model), targets, val, cfg, exec);
    nn::save_model(r.model, fs::path(a.out) / "model.pladckpt");
    const EvalReport rep = evaluate(r.model, val, cfg.beam_final, exec, cfg.threads);
    std::printf("best validation similarity %.6f; beam %d validation mean %.6f median %.6f\n", r.best_val,
                cfg.beam_final, rep.mean_metric(), rep.median_metric());
    return kOk;
}

// --- eval ----------------------------------------------------------------------------

struct EvalArgs {
    std::string model, shapes, out;
    bool val = false;
    int beam = 10;
};

void setup_eval(CLI::App& app, EvalArgs& a) {
    auto* c = app.add_subcommand("eval", "Best-of-beam reconstruction report");
    add_config(c);
    c->add_option("--model", a.model, "checkpoint")->required();
    c->add_option("--shapes", a.shapes, "dataset directory or PLADGRID file")->required();
    c->add_flag("--val", a.val, "use the validation slice of a dataset directory");
    c->add_option("--beam", a.beam, "beam size");
    c->add_option("--out", a.out, "output directory")->required();
}

int run_eval(const CLI::App& cmd, const EvalArgs& a) {
    if (a.beam < 1) throw UsageError("--beam must be >= 1");
    const nn::RecognitionModel model = load_recognition(a.model);
    const auto shapes = read_shape_set(a.shapes, a.val);
    const Executor exec(model.vocab_ptr());
    echo_config(cmd, a.out);
    const EvalReport rep = evaluate(model, shapes, a.beam, exec, default_threads());
    write_report(fs::path(a.out) / "report.csv", rep, model.vocab());
    const std::string metric = similarity_kind(rep.dsl) == SimilarityKind::IoU ? "iou" : "chamfer";
    char buf[200];
    std::snprintf(buf, sizeof buf, "metric=%s\nshapes=%zu\nbeam=%d\nmean=%.10g\nmedian=%.10g\nmean_similarity=%.10g\n",
                  metric.c_str(), rep.rows.size(), a.beam, rep.mean_metric(), rep.median_metric(),
                  rep.mean_similarity());
    std::ofstream(fs::path(a.out) / "summary.txt") << buf;
    std::cout << buf;
    return kOk;
}

// --- exec ----------------------------------------------------------------------------

struct ExecArgs {
    std::string dsl, vocab = "standard", programs, out;
    bool render = false;
};

void setup_exec(CLI::App& app, ExecArgs& a) {
    auto* c = app.add_subcommand("exec", "Execute a program file into occupancy grids");
    add_config(c);
    c->add_option("--dsl", a.dsl, "csg2d, csg3d or shapeassembly")->required();
    c->add_option("--vocab", a.vocab, "standard, mini, full (csg2d) or a vocabulary file");
    c->add_option("--programs", a.programs, "one program per line")->required();
    c->add_option("--out", a.out, "output directory")->required();
    c->add_flag("--render", a.render, "also write PGM images (three axis projections in 3D)");
}

int run_exec(const ExecArgs& a) {
    const DslId dsl = parse_dsl(a.dsl);
    const auto vocab = load_vocab(dsl, a.vocab);
    const Grammar grammar(vocab);
    if (!fs::exists(a.programs)) throw MissingInput("program file not found: " + a.programs);
    std::ifstream in(a.programs);
    fs::create_directories(a.out);
    const Executor exec(vocab);
    std::string line;
    int n = 0, written = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ShapeGrid g;
        try {
            g = exec(parse(grammar, line));
        } catch (const Error& e) {
            throw ParseError(n, e.what());
        }
        const std::string stem = "line_" + std::to_string(n);
        std::ofstream f(fs::path(a.out) / (stem + ".pladgrid"), std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write into " + a.out);
        write_grid(f, g);
        if (a.render) {
            if (g.rank() == 2) {
                write_pgm(fs::path(a.out) / (stem + ".pgm"), g);
            } else {
                const char* axes[] = {"x", "y", "z"};
                for (int axis = 0; axis < 3; ++axis) {
                    write_pgm(fs::path(a.out) / (stem + "_" + axes[axis] + ".pgm"), project(g, axis));
                }
            }
        }
        ++written;
    }
    std::cout << "executed " << written << " programs\n";
    return kOk;
}

int fail(const std::string& what, int code) {
    std::cerr << "plad: " << what << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shape program inference: synthetic data, pretraining, fine-tuning and evaluation"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0: PLAD_THREADS, then all cores)");
    GenArgs gen;
    PretrainArgs pre;
    FinetuneArgs fine;
    EvalArgs ev;
    ExecArgs ex;
    setup_gen(app, gen);
    setup_pretrain(app, pre);
    setup_finetune(app, fine);
    setup_eval(app, ev);
    setup_exec(app, ex);
    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const Error& e) {
        return fail(e.what(), dynamic_cast<const IoError*>(&e) ? kIo : kUsage);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    try {
        if (threads < 0) throw UsageError("--threads must be >= 0");
        set_default_threads(resolve_threads(threads));
        const CLI::App* cmd = app.get_subcommands().front();
        const std::string name = cmd->get_name();
        if (name == "gen-data") return run_gen(*cmd, gen);
        if (name == "pretrain") return run_pretrain(*cmd, pre);
        if (name == "finetune") return run_finetune(*cmd, fine);
        if (name == "eval") return run_eval(*cmd, ev);
        return run_exec(ex);
    } catch (const ParseError& e) {
        return fail(e.what(), kUsage);
    } catch (const UsageError& e) {
        return fail(e.what(), kUsage);
    } catch (const IoError& e) {
        return fail(e.what(), kIo);
    } catch (const CorruptCheckpoint& e) {
        return fail(e.what(), kIo);
    } catch (const VersionMismatch& e) {
        return fail(e.what(), kIo);
    } catch (const NumericFailure& e) {
        return fail(e.what(), kNumeric);
    } catch (const GenerationExhausted& e) {
        return fail(e.what(), kNumeric);
    } catch (const Error& e) {
        return fail(e.what(), kUsage);
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(e.what(), kIo);
    }
}
