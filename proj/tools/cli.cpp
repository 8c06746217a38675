#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "cva/costvol.hpp"
#include "cva/errors.hpp"
#include "cva/eval.hpp"
#include "cva/image_io.hpp"
#include "cva/matching.hpp"
#include "cva/net/network.hpp"
#include "cva/synth.hpp"
#include "cva/training.hpp"

namespace cva::cli {

namespace fs = std::filesystem;

namespace {

/// Data-level failures that map to the IO/format exit code.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
    if (const char* s = std::getenv("CVA_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
        }
    }
    return 0;
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
    fs::path out = path;
    out.replace_extension();
    out += suffix;
    return out;
}

/// Lines of whitespace-separated paths, resolved against the manifest's directory.
std::vector<std::vector<fs::path>> read_manifest(const fs::path& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::vector<std::vector<fs::path>> rows;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::vector<fs::path> row;
        for (std::string f; fields >> f;) {
            fs::path p(f);
            row.push_back(p.is_absolute() ? p : path.parent_path() / p);
        }
        if (row.empty()) continue;
        if (row.size() != columns)
            throw DataError(path.string() + ":" + std::to_string(number) + ": expected " + std::to_string(columns) +
                            " paths, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("manifest " + path.string() + " lists no entries");
    return rows;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> values;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        std::size_t used = 0;
        const int v = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument("not an integer list: " + text);
        values.push_back(v);
    }
    if (values.empty()) throw std::invalid_argument("empty integer list");
    return values;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

struct CostvolArgs {
    std::string left, right, out, disparity_out, gt;
    std::string matcher = "census-bm";
    int max_disparity = 255;
    int window = 5;
    float p1 = 2.0f;
    float p2 = 96.0f;
    int paths = 8;
};

int cmd_costvol(const CostvolArgs& a, std::ostream& out) {
    const auto matcher = costvol::parse_matcher(a.matcher);
    const GrayImage left = io::read_gray(a.left);
    const GrayImage right = io::read_gray(a.right);
    if (left.width() != right.width() || left.height() != right.height())
        throw DataError("left and right images differ in size");
    CostVolume raw = matching::build_cost_volume_bm(left, right, a.max_disparity, a.window);
    if (matcher == costvol::Matcher::kCensusSgm) raw = matching::sgm_aggregate(raw, a.p1, a.p2, a.paths);
    const DisparityMap disparity = matching::wta_disparity(raw);
    const CostVolume normalized = costvol::normalize(raw, costvol::default_bounds(matcher, a.window, a.p2, a.paths));
    costvol::write_volume(normalized, a.out);
    const fs::path disp_path = a.disparity_out.empty() ? with_suffix(a.out, "_disp.pgm") : fs::path(a.disparity_out);
    io::write_disparity(disp_path, disparity);
    out << "volume = " << a.out << " (" << normalized.width() << "x" << normalized.height() << "x"
        << normalized.depth() << ", " << costvol::matcher_name(matcher) << ")\n";
    out << "disparity = " << disp_path.string() << "\n";
    if (!a.gt.empty()) {
        const GroundTruthMap gt = io::read_ground_truth(a.gt);
        if (gt.valid_count() == 0) throw DataError("ground truth has no valid pixels");
        out << "epsilon = " << eval::overall_error(disparity, gt) << "\n";
    }
    return kExitOk;
}

struct DisparityArgs {
    std::string volume, out;
};

int cmd_disparity(const DisparityArgs& a, std::ostream& out) {
    const CostVolume volume = costvol::read_volume(a.volume);
    io::write_disparity(a.out, matching::wta_disparity(volume));
    out << "disparity = " << a.out << "\n";
    return kExitOk;
}

struct TrainArgs {
    std::string manifest, out, loss_log, checkpoint_dir;
    training::TrainConfig train;
    net::NetworkConfig net;
    std::string depth_kernels = join(net::NetworkConfig{}.depth_kernels);
    bool phase2_given = false;
    bool dry_run = false;
};

void echo_config(std::ostream& out, const training::TrainConfig& t, const net::NetworkConfig& n) {
    out << "batch-size = " << t.batch_size << "\n"
        << "epochs = " << t.phase1_epochs << "\n"
        << "lr = " << t.phase1_lr << "\n"
        << "epochs2 = " << t.phase2_epochs << "\n"
        << "lr2 = " << t.phase2_lr << "\n"
        << "beta1 = " << t.adam.beta1 << "\n"
        << "beta2 = " << t.adam.beta2 << "\n"
        << "adam-epsilon = " << t.adam.epsilon << "\n"
        << "dropout = " << n.dropout_rate << "\n"
        << "seed = " << t.seed << "\n"
        << "negative-weight = " << t.negative_weight << "\n"
        << "patch-size = " << n.patch_size << "\n"
        << "depth = " << n.depth << "\n"
        << "channels = " << n.channels << "\n"
        << "head-width = " << n.head_width << "\n"
        << "depth-kernels = " << join(n.depth_kernels) << "\n"
        << "init-stddev = " << n.conv_init_stddev << "\n";
}

int cmd_train(TrainArgs a, std::ostream& out) {
    a.net.depth_kernels = parse_int_list(a.depth_kernels);
    if (!a.phase2_given) a.train.phase2_epochs = static_cast<int>(std::lround(a.train.phase1_epochs * 0.3));

    const auto rows = read_manifest(a.manifest, 3);
    std::vector<CostVolume> volumes;
    std::vector<DisparityMap> disparities;
    std::vector<GroundTruthMap> truths;
    for (const auto& row : rows) {
        volumes.push_back(costvol::read_volume(row[0]));
        disparities.push_back(io::read_disparity(row[1], volumes.back().max_disparity()));
        truths.push_back(io::read_ground_truth(row[2]));
        if (volumes.back().depth() != volumes.front().depth())
            throw DataError("manifest volumes differ in depth");
    }
    a.net.depth = volumes.front().depth();
    a.net.validate();
    a.train.validate();
    echo_config(out, a.train, a.net);
    const auto set = training::build_training_set(std::move(volumes), disparities, truths, a.net.patch_size);
    out << "samples = " << set.samples.size() << " (" << set.positives() << " correct)\n";
    if (a.dry_run) return kExitOk;
    if (set.samples.empty()) throw DataError("no training samples (no valid ground truth away from the border)");

    training::EpochCallback on_epoch;
    if (!a.checkpoint_dir.empty()) {
        fs::create_directories(a.checkpoint_dir);
        on_epoch = [&](int epoch, const net::NetworkParams<float>& p) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%03d.cvam", epoch);
            net::save_params(p, fs::path(a.checkpoint_dir) / name);
        };
    }
    const auto result = training::train(a.train, a.net, set, on_epoch);
    net::save_params(result.params, a.out);
    const fs::path log_path = a.loss_log.empty() ? with_suffix(a.out, "_loss.csv") : fs::path(a.loss_log);
    training::write_loss_log(log_path, result.steps);
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e)
        out << "epoch " << e + 1 << " loss = " << result.epoch_losses[e] << "\n";
    out << "model = " << a.out << "\n";
    return kExitOk;
}

struct InferArgs {
    std::string model, volume, out, raw;
    int tile = 0;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
    const auto params = net::load_params<float>(a.model);
    const CostVolume volume = costvol::read_volume(a.volume);
    if (volume.depth() != params.config.depth)
        throw DataError("volume depth " + std::to_string(volume.depth()) + " does not match the model depth " +
                        std::to_string(params.config.depth));
    if (!volume.normalized()) throw DataError("volume is not normalized");
    const ConfidenceMap map = net::infer_full(params, volume, a.tile);
    io::write_confidence_pgm(a.out, map);
    const fs::path raw = a.raw.empty() ? with_suffix(a.out, ".pfm") : fs::path(a.raw);
    io::write_confidence_pfm(raw, map);
    out << "confidence = " << a.out << "\nraw = " << raw.string() << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string confidence, disparity, gt, manifest, out, summary;
    double step = 0.05;
    bool legacy = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    std::vector<std::vector<fs::path>> rows;
    if (!a.manifest.empty()) {
        rows = read_manifest(a.manifest, 3);
    } else {
        if (a.confidence.empty() || a.disparity.empty() || a.gt.empty())
            throw CLI::ValidationError("eval needs --confidence, --disparity and --gt, or --manifest");
        rows.push_back({a.confidence, a.disparity, a.gt});
    }
    const auto protocol = a.legacy ? eval::Protocol::kLegacy : eval::Protocol::kInterval;
    std::vector<eval::SummaryRow> summary;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const ConfidenceMap conf = io::read_confidence(rows[i][0]);
        const DisparityMap disp = io::read_disparity(rows[i][1]);
        const GroundTruthMap gt = io::read_ground_truth(rows[i][2]);
        if (gt.valid_count() == 0) throw DataError(rows[i][2].string() + ": no valid ground-truth pixels");
        if (conf.width() != gt.width() || conf.height() != gt.height() || disp.width() != gt.width() ||
            disp.height() != gt.height())
            throw DataError("evaluation inputs for " + rows[i][0].string() + " differ in size");
        const auto curve = eval::roc_curve(conf, disp, gt, a.step, protocol);
        const fs::path roc = rows.size() == 1 ? fs::path(a.out)
                                              : with_suffix(a.out, "_" + std::to_string(i) + ".csv");
        eval::write_roc_csv(roc, curve, a.step);
        summary.push_back({rows[i][0].filename().string(), curve.overall_error, eval::auc(curve),
                           eval::auc_opt(curve.overall_error)});
        out << rows[i][0].filename().string() << ": epsilon = " << summary.back().epsilon
            << ", auc = " << summary.back().auc << ", auc_opt = " << summary.back().auc_opt << "\n";
    }
    const fs::path summary_path = a.summary.empty() ? with_suffix(a.out, "_summary.csv") : fs::path(a.summary);
    eval::write_summary_csv(summary_path, summary);
    return kExitOk;
}

struct SynthArgs {
    std::string out_dir, archetype, curve_out;
    synth::SceneSpec scene;
    int count = 1;
    int curve_depth = 32;
    synth::CurveParams curve;
};

int cmd_synth(SynthArgs a, std::ostream& out) {
    if (!a.archetype.empty()) {
        const auto values =
            synth::gen_cost_curve(synth::parse_archetype(a.archetype), a.curve_depth, a.curve, a.scene.seed);
        std::ofstream csv(a.curve_out);
        if (!csv) throw IoError("cannot write " + a.curve_out);
        csv << "d,cost\n";
        for (std::size_t d = 0; d < values.size(); ++d) csv << d << ',' << values[d] << '\n';
        out << "curve = " << a.curve_out << "\n";
        return kExitOk;
    }
    if (a.count < 1) throw CLI::ValidationError("--count must be >= 1");
    a.scene.validate();
    if (a.scene.min_disparity < 1)
        throw CLI::ValidationError("--min-disparity must be >= 1 (0 marks invalid ground truth on disk)");
    fs::create_directories(a.out_dir);
    const std::uint64_t base = a.scene.seed;
    for (int i = 0; i < a.count; ++i) {
        a.scene.seed = base + static_cast<std::uint64_t>(i);
        const auto pair = synth::gen_stereo_pair(a.scene);
        char stem[32];
        std::snprintf(stem, sizeof stem, "scene_%03d", i);
        const fs::path dir(a.out_dir);
        io::write_gray(dir / (std::string(stem) + "_left.pgm"), pair.left);
        io::write_gray(dir / (std::string(stem) + "_right.pgm"), pair.right);
        io::write_ground_truth(dir / (std::string(stem) + "_gt.pgm"), pair.ground_truth);
    }
    out << "scenes = " << a.count << " in " << a.out_dir << "\n";
    return kExitOk;
}

void add_config(CLI::App* sub) {
    sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--config", "Flat 'key = value' file with option defaults; command-line flags win");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Splices the options of a `--config` file in front of the subcommand's own flags, so
/// that flags given on the command line take precedence (last value wins).
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
    auto sub_it = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.starts_with("-"); });
    if (sub_it == args.end()) return args;
    const CLI::App* sub = nullptr;
    try {
        sub = app.get_subcommand(*sub_it);
    } catch (const CLI::OptionNotFound&) {
        return args;
    }
    std::string file;
    for (auto it = sub_it + 1; it != args.end(); ++it) {
        if (*it == "--config" && it + 1 != args.end()) file = *(it + 1);
        else if (it->starts_with("--config=")) file = it->substr(9);
    }
    if (file.empty()) return args;
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file " + file);
    std::vector<std::string> tokens;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError(file + ":" + std::to_string(number) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        if (key == "config") throw CLI::ValidationError(file + ": config files cannot nest");
        const CLI::Option* opt = nullptr;
        try {
            opt = sub->get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            throw CLI::ValidationError(file + ":" + std::to_string(number) + ": unknown key '" + key + "'");
        }
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value == "yes" || value == "on") tokens.push_back("--" + key);
        } else {
            tokens.push_back("--" + key);
            tokens.push_back(value);
        }
    }
    args.insert(sub_it + 1, tokens.begin(), tokens.end());
    return args;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cost-volume confidence toolkit", "cva"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 success, 1 usage, 2 IO/format, 3 numerical.\n"
               "CVA_THREADS caps worker threads; CVA_SEED sets the default seed.");

    CostvolArgs cv;
    auto* c = app.add_subcommand("costvol", "Build a normalized cost volume and its WTA disparity map");
    add_config(c);
    c->add_option("--left", cv.left, "Left image (PGM)")->required();
    c->add_option("--right", cv.right, "Right image (PGM)")->required();
    c->add_option("--out", cv.out, "Output volume (CVAV)")->required();
    c->add_option("--disparity-out", cv.disparity_out, "WTA disparity PGM (default: <out>_disp.pgm)");
    c->add_option("--gt", cv.gt, "Ground truth PGM; prints the overall error when given");
    c->add_option("--matcher", cv.matcher, "census-bm or census-sgm")->capture_default_str();
    c->add_option("--max-disparity", cv.max_disparity, "Largest disparity (depth = value + 1)")
        ->capture_default_str();
    c->add_option("--window", cv.window, "Census window side (odd)")->capture_default_str();
    c->add_option("--p1", cv.p1, "SGM small penalty")->capture_default_str();
    c->add_option("--p2", cv.p2, "SGM large penalty")->capture_default_str();
    c->add_option("--paths", cv.paths, "SGM path count (4 or 8)")->capture_default_str();

    DisparityArgs dv;
    auto* d = app.add_subcommand("disparity", "Winner-take-all disparity of a stored volume");
    add_config(d);
    d->add_option("--volume", dv.volume, "Input volume (CVAV)")->required();
    d->add_option("--out", dv.out, "Output disparity PGM")->required();

    TrainArgs tr;
    tr.train.seed = default_seed();
    auto* t = app.add_subcommand("train", "Train the confidence network");
    add_config(t);
    t->add_option("--manifest", tr.manifest, "Lines of 'volume disparity gt' paths")->required();
    t->add_option("--out", tr.out, "Output checkpoint (CVAM)")->required();
    t->add_option("--loss-log", tr.loss_log, "Per-step loss CSV (default: <out>_loss.csv)");
    t->add_option("--checkpoint-dir", tr.checkpoint_dir, "Write a checkpoint after every epoch");
    t->add_option("--batch-size", tr.train.batch_size, "Batch size")->capture_default_str();
    t->add_option("--epochs", tr.train.phase1_epochs,
                  "Epochs at --lr; unless --epochs2 is given, the fine-tuning phase gets 30 % as many")
        ->capture_default_str();
    t->add_option("--lr", tr.train.phase1_lr, "First-phase learning rate")->capture_default_str();
    auto* e2 = t->add_option("--epochs2", tr.train.phase2_epochs, "Epochs at --lr2")->capture_default_str();
    t->add_option("--lr2", tr.train.phase2_lr, "Fine-tuning learning rate")->capture_default_str();
    t->add_option("--beta1", tr.train.adam.beta1, "Adam beta1")->capture_default_str();
    t->add_option("--beta2", tr.train.adam.beta2, "Adam beta2")->capture_default_str();
    t->add_option("--adam-epsilon", tr.train.adam.epsilon, "Adam epsilon")->capture_default_str();
    t->add_option("--dropout", tr.net.dropout_rate, "Dropout rate after the first head layer")
        ->capture_default_str();
    t->add_option("--seed", tr.train.seed, "Seed for initialization, shuffling and dropout (default: CVA_SEED or 0)")
        ->capture_default_str();
    t->add_option("--negative-weight", tr.train.negative_weight,
                  "Loss weight of incorrect samples (not in the original protocol)")
        ->capture_default_str();
    t->add_option("--patch-size", tr.net.patch_size, "Extract side N (odd)")->capture_default_str();
    t->add_option("--channels", tr.net.channels, "Feature channels per 3D layer")->capture_default_str();
    t->add_option("--head-width", tr.net.head_width, "Units of the first head layer")->capture_default_str();
    t->add_option("--depth-kernels", tr.depth_kernels, "Comma-separated depth-kernel sizes")->capture_default_str();
    t->add_option("--init-stddev", tr.net.conv_init_stddev, "Std-dev of the conv weight initializer")
        ->capture_default_str();
    t->add_flag("--dry-run", tr.dry_run, "Echo the configuration and sample count, then stop");

    InferArgs in;
    auto* i = app.add_subcommand("infer", "Whole-image confidence map from a trained model");
    add_config(i);
    i->add_option("--model", in.model, "Checkpoint (CVAM)")->required();
    i->add_option("--volume", in.volume, "Normalized volume (CVAV)")->required();
    i->add_option("--out", in.out, "16-bit confidence PGM (confidence x 65535)")->required();
    i->add_option("--raw", in.raw, "Float32 PFM sidecar (default: <out> with a .pfm extension)");
    i->add_option("--tile", in.tile, "Output tile side; 0 processes the image in one pass")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);

    EvalArgs ev;
    auto* v = app.add_subcommand("eval", "ROC curve and AUC of confidence maps");
    add_config(v);
    v->add_option("--confidence", ev.confidence, "Confidence map (PGM or PFM)");
    v->add_option("--disparity", ev.disparity, "Disparity PGM");
    v->add_option("--gt", ev.gt, "Ground truth PGM");
    v->add_option("--manifest", ev.manifest, "Lines of 'confidence disparity gt' paths");
    v->add_option("--out", ev.out, "ROC CSV (one per image with a manifest: <out>_<i>.csv)")->required();
    v->add_option("--summary", ev.summary, "Summary CSV (default: <out>_summary.csv)");
    v->add_option("--step", ev.step, "Density step")->capture_default_str();
    v->add_flag("--legacy", ev.legacy, "Use the non-interval protocol (for comparison)");

    SynthArgs sy;
    sy.scene.seed = default_seed();
    auto* s = app.add_subcommand("synth", "Synthetic stereo scenes or cost-curve fixtures");
    add_config(s);
    s->add_option("--out-dir", sy.out_dir, "Directory for scene_NNN_{left,right,gt}.pgm");
    s->add_option("--count", sy.count, "Number of scenes (seeds seed, seed+1, ...)")->capture_default_str();
    s->add_option("--width", sy.scene.width, "Image width")->capture_default_str();
    s->add_option("--height", sy.scene.height, "Image height")->capture_default_str();
    s->add_option("--min-disparity", sy.scene.min_disparity, "Smallest disparity")->capture_default_str();
    s->add_option("--max-disparity", sy.scene.max_disparity, "Largest disparity")->capture_default_str();
    s->add_option("--rectangles", sy.scene.rectangles, "Foreground rectangles")->capture_default_str();
    s->add_option("--texture-density", sy.scene.texture_density, "Textured fraction inside layers")
        ->capture_default_str();
    s->add_option("--textureless", sy.scene.textureless_fraction, "Fraction covered by flat patches")
        ->capture_default_str();
    s->add_option("--noise", sy.scene.noise_stddev, "Gaussian noise std-dev")->capture_default_str();
    s->add_option("--seed", sy.scene.seed, "Seed (default: CVA_SEED or 0)")->capture_default_str();
    s->add_option("--archetype", sy.archetype, "Write one cost curve instead: ideal|distinct-min|double-min|flat-min");
    s->add_option("--curve-depth", sy.curve_depth, "Cost-curve length")->capture_default_str();
    s->add_option("--curve-min", sy.curve.minimum, "Minimum index (-1: from seed)")->capture_default_str();
    s->add_option("--plateau", sy.curve.plateau_width, "flat-min plateau width")->capture_default_str();
    s->add_option("--curve-out", sy.curve_out, "Cost-curve CSV path");

    try {
        const auto expanded = expand_config(app, args);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
        tr.phase2_given = e2->count() > 0;
        if (s->parsed() && sy.archetype.empty() && sy.out_dir.empty())
            throw CLI::ValidationError("synth needs --out-dir (or --archetype with --curve-out)");
        if (s->parsed() && !sy.archetype.empty() && sy.curve_out.empty())
            throw CLI::ValidationError("--archetype needs --curve-out");
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    }

    try {
        if (c->parsed()) return cmd_costvol(cv, out);
        if (d->parsed()) return cmd_disparity(dv, out);
        if (t->parsed()) return cmd_train(tr, out);
        if (i->parsed()) return cmd_infer(in, out);
        if (v->parsed()) return cmd_eval(ev, out);
        if (s->parsed()) return cmd_synth(sy, out);
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const InvalidStateError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}

}  // namespace cva::cli
