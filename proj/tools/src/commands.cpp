// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "conerf/checkpoint.hpp"
#include "conerf/error.hpp"
#include "conerf/metrics.hpp"
#include "conerf/synthetic.hpp"
#include "conerf/training.hpp"
#include "service.hpp"

namespace conerf::cli {

namespace fs = std::filesystem;

namespace {

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing file: " + path.string());
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// A split directory, or a dataset root holding `split`/.
fs::path split_dir(const fs::path& data, const std::string& split) {
    if (fs::exists(data / kManifestFile)) return data;
    if (fs::exists(data / split / kManifestFile)) return data / split;
    throw ValidationError("no " + split + " split under " + data.string());
}

struct GenerateArgs {
    std::string spec;
    std::string out;
    std::string mode;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int size = 0;
    int train_frames = 0;
    int test_frames = 0;
    bool force = false;
};

int generate(const GenerateArgs& a, std::ostream& out) {
    SyntheticSceneSpec spec = a.spec.empty()
                                  ? SyntheticSceneSpec::defaults(a.mode == "3d" ? FieldMode::k3D : FieldMode::k2D)
                                  : synthetic_spec_from_json(read_text(a.spec));
    if (!a.spec.empty() && !a.mode.empty() && parse_field_mode(a.mode) != spec.mode) {
        throw ValidationError("--mode contradicts the spec file");
    }
    if (a.seed_set) spec.seed = a.seed;
    if (a.size > 0) spec.width = spec.height = a.size;
    if (a.train_frames > 0) spec.train_frames = a.train_frames;
    if (a.test_frames > 0) spec.test_frames = a.test_frames;
    try {
        spec.validate();
    } catch (const ContractViolation& e) {
        throw ValidationError(e.what());
    }
    const fs::path dir(a.out);
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!a.force) throw ValidationError(dir.string() + " is not empty; pass --force to overwrite");
        fs::remove_all(dir);
    }
    const SyntheticDataset data = generate_synthetic(spec);
    save_dataset(data.train, dir / "train");
    save_dataset(data.test, dir / "test");
    std::ofstream(dir / "spec.json") << synthetic_spec_to_json(spec) << '\n';
    for (const Dataset* d : {&data.train, &data.test}) {
        out << d->manifest.split << ": " << d->num_frames() << " frames, " << d->width() << "x" << d->height() << ", "
            << d->manifest.annotations.size() << " annotations\n";
    }
    return kExitOk;
}

struct TrainArgs {
    std::string data;
    std::string out;
    std::string config;
    std::string mode;
    std::int64_t steps = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string ablate;
    std::string resume;
    std::int64_t log_every = 100;
    std::int64_t validation_every = 1000;
    std::int64_t checkpoint_every = 0;
    bool full_size = false;
    bool quiet = false;
};

int train(const TrainArgs& a, std::ostream& out) {
    const Dataset dataset = load_dataset(split_dir(a.data, "train"));
    if (!a.mode.empty() && parse_field_mode(a.mode) != dataset.mode()) {
        throw ValidationError("--mode " + a.mode + " does not match the " + to_string(dataset.mode()) + " dataset");
    }
    std::unique_ptr<Trainer> trainer;
    if (!a.resume.empty()) {
        const Checkpoint ckpt = load_checkpoint(a.resume);
        if (!a.config.empty() || a.steps > 0 || a.seed_set || !a.ablate.empty()) {
            throw ValidationError("--resume continues the stored configuration; drop the other training flags");
        }
        trainer = std::make_unique<Trainer>(dataset, ckpt);
    } else {
        const TrainConfig defaults = desk_train_config(dataset.mode());
        TrainConfig config = a.config.empty() ? defaults : train_config_from_json(read_text(a.config), defaults);
        if (a.steps > 0) config.total_steps = a.steps;
        if (a.seed_set) config.seed = a.seed;
        if (a.ablate == "mask") {
            config.weights.mask = 0.0;
        } else if (a.ablate == "attr") {
            config.weights.attr = 0.0;
        } else if (a.ablate == "all") {
            config.weights.mask = 0.0;
            config.weights.attr = 0.0;
        }
        trainer = std::make_unique<Trainer>(dataset, model_config_for(dataset, config, a.full_size), config);
    }
    FitOptions options;
    options.out_dir = a.out;
    options.log_every = a.log_every;
    options.validation_every = a.validation_every;
    options.checkpoint_every = a.checkpoint_every;
    if (!a.quiet) {
        options.on_log = [&out](const LossReport& r, std::optional<double> psnr) {
            out << "step " << r.step + 1 << "  loss " << r.total << "  recon " << r.recon << "  attr " << r.attr
                << "  mask " << r.mask;
            if (psnr) out << "  psnr " << *psnr;
            out << '\n' << std::flush;
        };
    }
    fit(*trainer, dataset, options);
    out << "wrote " << (fs::path(a.out) / "final.ckpt").string() << '\n';
    return kExitOk;
}

std::map<std::string, double> parse_attribute_flags(const std::vector<std::string>& flags) {
    std::map<std::string, double> values;
    for (const std::string& f : flags) {
        const auto eq = f.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("--attr expects name=value, got '" + f + "'");
        double v;
        try {
            std::size_t used = 0;
            v = std::stod(f.substr(eq + 1), &used);
            if (used != f.size() - eq - 1) throw std::invalid_argument(f);
        } catch (const std::exception&) {
            throw ValidationError("attribute value is not a number in '" + f + "'");
        }
        values[f.substr(0, eq)] = v;
    }
    return values;
}

struct RenderArgs {
    std::string checkpoint;
    std::string camera;
    int frame = 0;
    std::vector<std::string> attrs;
    int width = 0;
    int height = 0;
    bool masks = false;
    std::string out;
};

int render(const RenderArgs& a, std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const ConerfModel model = model_from_checkpoint(ckpt);
    const ModelConfig& cfg = model.config();
    if (a.frame < 0 || a.frame >= cfg.num_frames) throw ValidationError("frame " + std::to_string(a.frame) + " out of range");
    FrameCodes codes = frame_codes(model, a.frame);
    const std::map<std::string, double> overrides = parse_attribute_flags(a.attrs);
    if (!overrides.empty()) {
        std::vector<double> values = regress_attributes(model, codes.latent);
        for (const auto& [name, v] : overrides) {
            const auto it = std::find(ckpt.attributes.begin(), ckpt.attributes.end(), name);
            if (it == ckpt.attributes.end()) throw ValidationError("unknown attribute '" + name + "'");
            if (!(v >= -1.0 && v <= 1.0)) throw ValidationError("attribute '" + name + "' out of range [-1, 1]");
            values[static_cast<std::size_t>(it - ckpt.attributes.begin())] = v;
        }
        codes.attributes = std::move(values);
    }
    const int width = a.width > 0 ? a.width : ckpt.image_width;
    const int height = a.height > 0 ? a.height : ckpt.image_height;
    const RenderSettings settings = inference_settings(ckpt);
    RenderedImage rendered;
    if (cfg.mode == FieldMode::k2D) {
        rendered = render_image_2d(model, width, height, codes, settings);
    } else {
        if (a.camera.empty()) throw ValidationError("3D renders need --camera");
        const std::string text = fs::exists(a.camera) ? read_text(a.camera) : a.camera;
        Camera camera = camera_from_json(text);
        if (a.width > 0 || a.height > 0) camera = camera.resized(width, height);
        rendered = render_image(model, camera, codes, settings);
    }
    const fs::path path(a.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_png(path, to_image(rendered));
    out << "wrote " << path.string() << '\n';
    if (a.masks) {
        for (std::size_t i = 0; i < ckpt.attributes.size(); ++i) {
            fs::path mask = path;
            mask.replace_filename(path.stem().string() + "_mask_" + ckpt.attributes[i] + ".png");
            write_png(mask, mask_image(rendered, static_cast<int>(i) + 1));
            out << "wrote " << mask.string() << '\n';
        }
    }
    return kExitOk;
}

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string protocol = "all";
    std::string out;
    int max_frames = 0;
};

int evaluate(const EvalArgs& a, std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const ConerfModel model = model_from_checkpoint(ckpt);
    EvaluationOptions options;
    options.settings = inference_settings(ckpt);
    options.max_frames = a.max_frames;
    const Dataset train = load_dataset(split_dir(a.data, "train"));
    const bool all = a.protocol == "all";
    std::vector<ProtocolResult> rows;
    if (all || a.protocol == "reconstruction") rows.push_back(evaluate_reconstruction(model, train, options));
    if (all || a.protocol == "interpolation") rows.push_back(evaluate_interpolation(model, train, options));
    if (all || a.protocol == "attribute" || a.protocol == "regressor") {
        const Dataset test = load_dataset(split_dir(a.data, "test"));
        if (all || a.protocol == "attribute") rows.push_back(evaluate_attributes(model, train, test, options));
        if (all || a.protocol == "regressor") {
            rows.push_back(evaluate_regressor(model, fit_attribute_regressor(model, train), test, options));
        }
    }
    const std::string csv = metrics_csv(rows);
    if (a.out.empty()) {
        out << csv;
    } else {
        write_metrics_csv(a.out, rows);
        out << "wrote " << a.out << '\n';
    }
    return kExitOk;
}

service::HttpServer* active_server = nullptr;

void stop_server(int) {
    if (active_server) active_server->stop();
}

int default_port() {
    const char* env = std::getenv(kPortVariable);
    if (!env || !*env) return kDefaultPort;
    try {
        return std::stoi(env);
    } catch (const std::exception&) {
        throw ValidationError(std::string(kPortVariable) + " is not a port number");
    }
}

int serve(const std::string& checkpoint, const std::string& host, int port, std::ostream& out) {
    const service::RenderService svc(load_checkpoint(checkpoint));
    service::HttpServer server(svc);
    const int bound = server.bind(host, port);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    out << "serving on http://" << host << ":" << bound << '\n' << std::flush;
    active_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    server.listen();
    active_server = nullptr;
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Controllable neural fields: synthetic data, training, rendering, evaluation and serving."};
    app.require_subcommand(1);
    app.set_version_flag("--version", "conerf 0.1.0");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic dataset (train and test splits)");
    g->add_option("--spec", gen.spec, "Scene spec JSON; defaults for the mode otherwise")->check(CLI::ExistingFile);
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--mode", gen.mode, "2d or 3d")->check(CLI::IsMember({"2d", "3d"}));
    g->add_option("--seed", gen.seed, "Annotation sampling seed")->each([&](const std::string&) { gen.seed_set = true; });
    g->add_option("--size", gen.size, "Square image side in pixels")->check(CLI::PositiveNumber);
    g->add_option("--train-frames", gen.train_frames)->check(CLI::PositiveNumber);
    g->add_option("--test-frames", gen.test_frames)->check(CLI::PositiveNumber);
    g->add_flag("--force", gen.force, "Overwrite a non-empty output directory");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Fit a model to a dataset");
    t->add_option("--data", tr.data, "Dataset root or train split directory")->required();
    t->add_option("--out", tr.out, "Output directory for checkpoints and metrics.csv")->required();
    t->add_option("--config", tr.config, "Training config JSON")->check(CLI::ExistingFile);
    t->add_option("--mode", tr.mode, "Expected dataset mode")->check(CLI::IsMember({"2d", "3d"}));
    t->add_option("--steps", tr.steps, "Total optimisation steps")->check(CLI::PositiveNumber);
    t->add_option("--seed", tr.seed)->each([&](const std::string&) { tr.seed_set = true; });
    t->add_option("--ablate", tr.ablate, "Disable loss terms: mask, attr or all")
        ->check(CLI::IsMember({"mask", "attr", "all"}));
    t->add_option("--resume", tr.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
    t->add_option("--log-every", tr.log_every)->check(CLI::NonNegativeNumber);
    t->add_option("--validate-every", tr.validation_every)->check(CLI::NonNegativeNumber);
    t->add_option("--checkpoint-every", tr.checkpoint_every)->check(CLI::NonNegativeNumber);
    t->add_flag("--full-size", tr.full_size, "Use the full-size networks");
    t->add_flag("--quiet", tr.quiet);

    RenderArgs rd;
    auto* r = app.add_subcommand("render", "Render an image, optionally overriding attributes");
    r->add_option("--checkpoint", rd.checkpoint)->required()->check(CLI::ExistingFile);
    r->add_option("--camera", rd.camera, "Camera JSON file or inline JSON (3D)");
    r->add_option("--frame", rd.frame, "Training frame whose codes are used");
    r->add_option("--attr", rd.attrs, "Attribute override name=value, value in [-1, 1]");
    r->add_option("--width", rd.width)->check(CLI::PositiveNumber);
    r->add_option("--height", rd.height)->check(CLI::PositiveNumber);
    r->add_flag("--masks", rd.masks, "Also write one mask map per attribute");
    r->add_option("--out", rd.out, "Output PNG")->required();

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint and write a metrics CSV");
    e->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
    e->add_option("--data", ev.data, "Dataset root with train/ and test/")->required();
    e->add_option("--protocol", ev.protocol)
        ->check(CLI::IsMember({"attribute", "reconstruction", "interpolation", "regressor", "all"}));
    e->add_option("--out", ev.out, "CSV path; stdout when omitted");
    e->add_option("--max-frames", ev.max_frames)->check(CLI::NonNegativeNumber);

    std::string serve_checkpoint;
    std::string host = "127.0.0.1";
    int port = -1;
    auto* s = app.add_subcommand("serve", "Serve renders over HTTP");
    s->add_option("--checkpoint", serve_checkpoint)->required()->check(CLI::ExistingFile);
    s->add_option("--host", host);
    s->add_option("--port", port, std::string("Port; defaults to $") + kPortVariable + " or 8080")
        ->check(CLI::Range(0, 65535));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*g) return generate(gen, out);
        if (*t) return train(tr, out);
        if (*r) return render(rd, out);
        if (*e) return evaluate(ev, out);
        if (*s) return serve(serve_checkpoint, host, port >= 0 ? port : default_port(), out);
    } catch (const ValidationError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitValidation;
    } catch (const DataError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitValidation;
    } catch (const ContractViolation& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitRuntime;
    }
    return kExitValidation;
}

}  // namespace conerf::cli
