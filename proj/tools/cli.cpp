#include "cli.hpp"

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "retina/encoder.hpp"
#include "retina/error.hpp"
#include "retina/eval.hpp"
#include "retina/harris.hpp"
#include "retina/imaging.hpp"
#include "retina/matcher.hpp"
#include "retina/optic_disc.hpp"
#include "retina/store.hpp"

namespace retina::cli {
namespace {

namespace fs = std::filesystem;

struct Config {
    HarrisParams harris;
    OdParams od;
    Weights weights;
    std::string gallery_path;
    std::string od_override;
    std::uint64_t seed = 42;
    unsigned threads = 1;

    void validate() const {
        harris.validate();
        od.validate();
        weights.validate();
    }
};

// Usage problems detected after CLI11 has parsed successfully.
class UsageError : public Error {
public:
    using Error::Error;
};

Point parse_point(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw UsageError("--od expects 'x,y', got '" + text + "'");
    try {
        std::size_t used_x = 0;
        std::size_t used_y = 0;
        const std::string xs = text.substr(0, comma);
        const std::string ys = text.substr(comma + 1);
        Point p{std::stod(xs, &used_x), std::stod(ys, &used_y)};
        if (used_x != xs.size() || used_y != ys.size()) throw std::invalid_argument("trailing characters");
        return p;
    } catch (const std::exception&) {
        throw UsageError("--od expects 'x,y', got '" + text + "'");
    }
}

// Disc center for an image: --od flag, then `<image>.od` sidecar, then detection.
OdCenter resolve_od(const Config& cfg, const fs::path& image, const IntensityMap& map) {
    if (!cfg.od_override.empty()) {
        const auto p = parse_point(cfg.od_override);
        return manual_od(p.x, p.y, map);
    }
    Point p;
    if (read_od_sidecar(image, p)) return manual_od(p.x, p.y, map);
    return locate_od(map, cfg.od);
}

FeatureTemplate encode_image(const Config& cfg, const fs::path& image, OdCenter* od_out = nullptr) {
    const auto map = to_intensity(load_image(image));
    const auto od = resolve_od(cfg, image, map);
    if (od_out) *od_out = od;
    return encode(polarize(detect_corners(map, cfg.harris), od));
}

std::string g6(double v) { return fmt::format("{:.6g}", v); }

Gallery require_gallery(const Config& cfg) {
    if (cfg.gallery_path.empty()) throw UsageError("--gallery is required");
    return load_gallery(cfg.gallery_path);
}

// Exclusive advisory lock held for the lifetime of the object.
class FileLock {
public:
    explicit FileLock(const fs::path& path) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
        if (fd_ < 0) throw Error("cannot open lock file '" + path.string() + "'");
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw Error("cannot lock '" + path.string() + "'");
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

int cmd_detect(const Config& cfg, const std::string& image, std::ostream& out) {
    const auto map = to_intensity(load_image(image));
    for (const auto& c : detect_corners(map, cfg.harris)) out << c.x << ' ' << c.y << ' ' << g6(c.response) << '\n';
    return kOk;
}

int cmd_enroll(const Config& cfg, const std::string& image, const std::string& subject, std::ostream& out) {
    if (cfg.gallery_path.empty()) throw UsageError("--gallery is required");
    if (!is_valid_subject_id(subject)) throw UsageError("invalid subject id '" + subject + "'");

    const fs::path gallery = cfg.gallery_path;
    const bool single_file = fs::is_regular_file(gallery);
    if (!single_file) fs::create_directories(gallery);
    FileLock lock(single_file ? gallery : gallery / ".lock");

    try {
        if (load_gallery(gallery).find(subject)) throw DuplicateSubjectError(subject);
    } catch (const EmptyGalleryError&) {
    }

    GalleryRecord rec;
    rec.subject_id = subject;
    rec.feature = encode_image(cfg, image, &rec.od);
    rec.source_image = image;

    if (single_file) {
        const auto text = "\n" + format_record(rec);
        std::ofstream f(gallery, std::ios::binary | std::ios::app);
        f << text;
        if (!f) throw Error("failed appending to '" + gallery.string() + "'");
    } else {
        const auto path = gallery / (subject + std::string(kTemplateExtension));
        if (fs::exists(path)) throw DuplicateSubjectError(subject);
        save_template(rec, path);
    }
    out << "enrolled " << subject << " od " << format_number(rec.od.x) << ' ' << format_number(rec.od.y) << ' '
        << to_string(rec.od.source) << " slots " << rec.feature.nonzero(0) << ' ' << rec.feature.nonzero(1) << ' '
        << rec.feature.nonzero(2) << '\n';
    return kOk;
}

int cmd_identify(const Config& cfg, const std::string& image, std::optional<std::size_t> top_k, std::ostream& out) {
    const auto gallery = require_gallery(cfg);
    const auto query = encode_image(cfg, image);
    const auto ranked = identify(query, gallery.records, cfg.weights, cfg.threads);
    const std::size_t n = top_k ? std::min(*top_k, ranked.size()) : ranked.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = ranked[i];
        const auto& s = c.score;
        out << (i + 1) << ' ' << c.subject_id << ' ' << g6(s.total) << ' ' << g6(s.si[0]) << ' ' << g6(s.si[1]) << ' '
            << g6(s.si[2]) << ' ' << s.best_shift[0] << ' ' << s.best_shift[1] << ' ' << s.best_shift[2] << '\n';
    }
    return kOk;
}

int cmd_verify(const Config& cfg, const std::string& image, const std::string& subject, double threshold,
               std::ostream& out) {
    const auto gallery = require_gallery(cfg);
    const auto* rec = gallery.find(subject);
    if (!rec) throw UsageError("subject '" + subject + "' is not enrolled");
    const auto v = verify(encode_image(cfg, image), *rec, threshold, cfg.weights);
    const bool ok = v.decision == Decision::accept;
    out << (ok ? "accept " : "reject ") << subject << ' ' << g6(v.score.total) << '\n';
    return ok ? kOk : kReject;
}

struct EvalOptions {
    std::string source = "synthetic";
    std::vector<int> rotations{5, 10, 20};
    int subjects = 50;
    int corners = 20;
    double angle_range = 15.0;
    double jitter_px = 0.5;
    double jitter_deg = 0.5;
    bool integer_angles = false;
    std::string csv_path;
    std::string far_frr_path;
    int far_frr_steps = 100;
    std::vector<double> th_sweep;
};

ExperimentSpec make_spec(const Config& cfg, const EvalOptions& o) {
    ExperimentSpec spec;
    spec.rotations_per_query = o.rotations;
    spec.angle_range = o.angle_range;
    spec.jitter_px = o.jitter_px;
    spec.jitter_deg = o.jitter_deg;
    spec.rng_seed = cfg.seed;
    spec.integer_angles = o.integer_angles;
    spec.n_subjects = o.subjects;
    spec.n_corners = o.corners;
    spec.response_floor = cfg.harris.threshold;
    spec.weights = cfg.weights;
    spec.threads = cfg.threads;
    return spec;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw Error("failed writing '" + path + "'");
}

// Genuine and impostor probes for the synthetic gallery: one perturbed query
// per subject at a seeded angle.
std::string far_frr_csv(const ExperimentSpec& spec, int steps) {
    const auto subjects = synth_gallery(spec);
    Gallery gallery;
    std::vector<Probe> probes;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const auto id = fmt::format("s{:03d}", i);
        gallery.records.push_back({id, encode(subjects[i]), "synthetic", OdCenter{}});
        Rng rng(derive_seed(spec.rng_seed, {0xFA11ULL, i}));
        const double angle = rng.uniform(-spec.angle_range, spec.angle_range);
        probes.push_back({id, encode(perturb(subjects[i], angle, spec, rng))});
    }
    // Evenly spaced from 0 to just above the largest self-match total.
    double max_score = 0.0;
    for (const auto& r : gallery.records) {
        double self = 0.0;
        for (int c = 0; c < kClasses; ++c) self += spec.weights[c] * static_cast<double>(r.feature.nonzero(c));
        max_score = std::max(max_score, self);
    }
    std::vector<double> thresholds;
    for (int i = 0; i < steps; ++i) thresholds.push_back(1.01 * max_score * i / (steps - 1));
    std::string csv = "threshold,far_percent,frr_percent\n";
    for (const auto& row : far_frr_sweep(gallery, probes, thresholds, spec.weights))
        csv += fmt::format("{},{:.4f},{:.4f}\n", g6(row.threshold), row.far, row.frr);
    return csv;
}

int cmd_eval(const Config& cfg, const EvalOptions& o, std::ostream& out) {
    auto spec = make_spec(cfg, o);
    AccuracyReport report;
    if (o.source == "synthetic") {
        if (o.subjects < 2) throw UsageError("--subjects must be >= 2");
        if (o.corners < 1) throw UsageError("--corners must be >= 1");
        report = rotation_experiment(spec);
    } else {
        report = rotation_experiment(fs::path(o.source), spec, ImagePipeline{cfg.harris, cfg.od});
    }
    out << format_report_table(report);
    if (!o.csv_path.empty()) write_text(o.csv_path, format_report_csv(report));
    if (!o.far_frr_path.empty()) {
        if (o.source != "synthetic") throw UsageError("--far-frr is available for the synthetic source only");
        if (o.far_frr_steps < 2) throw UsageError("--far-frr-steps must be >= 2");
        write_text(o.far_frr_path, far_frr_csv(spec, o.far_frr_steps));
    }
    if (!o.th_sweep.empty()) {
        if (o.source == "synthetic") throw UsageError("--th-sweep needs an image directory source");
        std::vector<fs::path> images;
        for (const auto& e : fs::directory_iterator(o.source)) {
            const auto ext = e.path().extension().string();
            if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) images.push_back(e.path());
        }
        std::sort(images.begin(), images.end());
        std::vector<double> totals(o.th_sweep.size(), 0.0);
        for (const auto& p : images) {
            const auto counts = threshold_sweep(to_intensity(load_image(p)), cfg.harris, o.th_sweep);
            for (std::size_t i = 0; i < counts.size(); ++i) totals[i] += static_cast<double>(counts[i]);
        }
        out << "threshold mean_corners_per_image\n";
        for (std::size_t i = 0; i < totals.size(); ++i)
            out << g6(o.th_sweep[i]) << ' ' << g6(images.empty() ? 0.0 : totals[i] / images.size()) << '\n';
    }
    return kOk;
}

struct SynthOptions {
    int subjects = 50;
    int corners = 20;
    std::string images_dir;
    int image_size = 256;
};

int cmd_synth(const Config& cfg, const SynthOptions& o, std::ostream& out) {
    if (o.subjects < 1) throw UsageError("--subjects must be >= 1");
    if (o.corners < 1) throw UsageError("--corners must be >= 1");
    if (cfg.gallery_path.empty() && o.images_dir.empty()) throw UsageError("synth needs --gallery and/or --images");

    if (!cfg.gallery_path.empty()) {
        ExperimentSpec spec;
        spec.rng_seed = cfg.seed;
        spec.n_subjects = o.subjects;
        spec.n_corners = o.corners;
        spec.response_floor = cfg.harris.threshold;
        const auto subjects = synth_gallery(spec);
        const fs::path dir = cfg.gallery_path;
        fs::create_directories(dir);
        FileLock lock(dir / ".lock");
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            const auto id = fmt::format("s{:03d}", i);
            save_template({id, encode(subjects[i]), "synthetic", OdCenter{}}, dir / (id + std::string(kTemplateExtension)));
        }
        out << "wrote " << subjects.size() << " synthetic templates to " << dir.string() << '\n';
    }
    if (!o.images_dir.empty()) {
        if (o.image_size < 64) throw UsageError("--size must be >= 64");
        const fs::path dir = o.images_dir;
        fs::create_directories(dir);
        for (int i = 0; i < o.subjects; ++i) {
            const auto f = synth_fundus(o.image_size, o.image_size, derive_seed(cfg.seed, {0xF0ULL, static_cast<std::uint64_t>(i)}));
            const auto path = dir / fmt::format("r{:03d}.pgm", i);
            save_image(to_raster(f.map), path);
            write_text(path.string() + ".od", format_number(f.od.x) + " " + format_number(f.od.y) + "\n");
        }
        out << "wrote " << o.subjects << " synthetic fundus images to " << dir.string() << '\n';
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retinal identification from vessel corners and bifurcations"};
    app.name(args.empty() ? "retina" : fs::path(args[0]).filename().string());
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "File of 'key = value' lines mirroring the long flag names");

    Config cfg;
    app.add_option("--gallery", cfg.gallery_path, "Gallery directory (or single .rtpl file)");
    app.add_option("--od", cfg.od_override, "Optic disc center 'x,y' (skips detection)");
    app.add_option("--seed", cfg.seed, "Seed for synthetic data and rotation sampling");
    app.add_option("--threads", cfg.threads, "Worker threads for scoring")->check(CLI::Range(1u, 256u));
    app.add_option("--k", cfg.harris.k, "Harris response coefficient");
    app.add_option("--th", cfg.harris.threshold, "Harris response threshold");
    app.add_option("--sigma", cfg.harris.sigma, "Gaussian window scale (pixels)");
    app.add_option("--window-radius", cfg.harris.window_radius, "Gaussian window radius (pixels)");
    app.add_option("--nms-radius", cfg.harris.nms_radius, "Non-maximum suppression radius (pixels)");
    app.add_option("--border-margin", cfg.harris.border_margin, "Frame excluded from detection (pixels)");
    app.add_option("--od-radius", cfg.od.template_radius, "Optic disc template radius (pixels)");
    app.add_option("--od-stride", cfg.od.search_stride, "Optic disc coarse search stride (pixels)");
    app.add_option("--od-margin", cfg.od.margin, "Optic disc search margin (pixels)");
    app.add_option("--w1", cfg.weights.w1, "Weight of ring 1 (< 25 px)");
    app.add_option("--w2", cfg.weights.w2, "Weight of ring 2 (25-50 px)");
    app.add_option("--w3", cfg.weights.w3, "Weight of ring 3 (50-80 px)");

    std::string image;
    std::string subject;
    double threshold = 0.0;
    std::optional<std::size_t> top_k;
    EvalOptions eval_opts;
    SynthOptions synth_opts;

    auto* detect = app.add_subcommand("detect", "List Harris corners: x y response");
    detect->add_option("image", image, "PGM/PPM image")->required();

    auto* enroll = app.add_subcommand("enroll", "Encode an image and add it to the gallery");
    enroll->add_option("image", image, "PGM/PPM image")->required();
    enroll->add_option("subject", subject, "Subject id [A-Za-z0-9_-]{1,64}")->required();

    auto* ident = app.add_subcommand("identify", "Rank gallery subjects against an image");
    ident->add_option("image", image, "PGM/PPM image")->required();
    ident->add_option("--top-k", top_k, "Print only the first k candidates")->check(CLI::PositiveNumber);

    auto* ver = app.add_subcommand("verify", "Accept or reject a claimed identity");
    ver->add_option("image", image, "PGM/PPM image")->required();
    ver->add_option("subject", subject, "Claimed subject id")->required();
    ver->add_option("threshold", threshold, "Minimum total similarity to accept")->required()->check(CLI::NonNegativeNumber);

    auto* ev = app.add_subcommand("eval", "Rotation experiment (rank-1 accuracy per rotation count)");
    ev->add_option("--source", eval_opts.source, "'synthetic' or a directory of PGM/PPM images");
    ev->add_option("--rotations", eval_opts.rotations, "Rotation counts per query")->delimiter(',');
    ev->add_option("--subjects", eval_opts.subjects, "Synthetic subjects");
    ev->add_option("--corners", eval_opts.corners, "Corners per synthetic subject");
    ev->add_option("--angle-range", eval_opts.angle_range, "Angles drawn from [-range, range] degrees");
    ev->add_option("--jitter-px", eval_opts.jitter_px, "Distance jitter (pixels)");
    ev->add_option("--jitter-deg", eval_opts.jitter_deg, "Orientation jitter (degrees)");
    ev->add_flag("--integer-angles", eval_opts.integer_angles, "Round sampled angles to whole degrees");
    ev->add_option("--csv", eval_opts.csv_path, "Write the accuracy CSV here");
    ev->add_option("--far-frr", eval_opts.far_frr_path, "Write a FAR/FRR threshold sweep CSV here");
    ev->add_option("--far-frr-steps", eval_opts.far_frr_steps, "Thresholds in the FAR/FRR sweep");
    ev->add_option("--th-sweep", eval_opts.th_sweep, "Harris thresholds to sweep over an image directory")
        ->delimiter(',');

    auto* syn = app.add_subcommand("synth", "Write a synthetic gallery and/or synthetic fundus images");
    syn->add_option("--subjects", synth_opts.subjects, "Number of subjects");
    syn->add_option("--corners", synth_opts.corners, "Corners per subject");
    syn->add_option("--images", synth_opts.images_dir, "Also render fundus-like images into this directory");
    syn->add_option("--size", synth_opts.image_size, "Rendered image side (pixels)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("retina");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        cfg.validate();
        if (*detect) return cmd_detect(cfg, image, out);
        if (*enroll) return cmd_enroll(cfg, image, subject, out);
        if (*ident) return cmd_identify(cfg, image, top_k, out);
        if (*ver) return cmd_verify(cfg, image, subject, threshold, out);
        if (*ev) return cmd_eval(cfg, eval_opts, out);
        if (*syn) return cmd_synth(cfg, synth_opts, out);
    } catch (const EmptyGalleryError& e) {
        err << "error: " << e.what() << '\n';
        return kEmptyGallery;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}

}  // namespace retina::cli
