#include "retina/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "retina/error.hpp"

namespace retina {

double Rng::uniform(double lo, double hi) {
    // 53 random mantissa bits -> [0, 1).
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    for (auto c : coords) h = mix(h ^ mix(c));
    return h;
}

void ExperimentSpec::validate() const {
    if (rotations_per_query.empty()) throw Error("experiment: at least one rotation count required");
    for (int r : rotations_per_query)
        if (r < 1) throw Error("experiment: rotations_per_query must be >= 1");
    if (!(angle_range > 0.0)) throw Error("experiment: angle_range must be > 0");
    if (!(jitter_px >= 0.0) || !(jitter_deg >= 0.0)) throw Error("experiment: jitter must be >= 0");
    weights.validate();
}

Constellation synth_constellation(int n_corners, Rng& rng, double response_floor) {
    if (n_corners < 1) throw Error("synth_constellation: n_corners must be >= 1");
    Constellation out;
    out.reserve(static_cast<std::size_t>(n_corners));
    for (int i = 0; i < n_corners; ++i) {
        PolarCorner pc;
        pc.distance = rng.uniform(5.0, 79.0);
        pc.orientation = rng.uniform(0.0, 360.0);
        pc.response = rng.uniform(response_floor, 10.0 * response_floor);
        out.push_back(pc);
    }
    return out;
}

Constellation perturb(std::span<const PolarCorner> corners, double angle, const ExperimentSpec& spec, Rng& rng) {
    Constellation out;
    out.reserve(corners.size());
    for (const auto& c : corners) {
        PolarCorner p = c;
        const double dtheta = spec.jitter_deg > 0.0 ? rng.uniform(-spec.jitter_deg, spec.jitter_deg) : 0.0;
        const double dr = spec.jitter_px > 0.0 ? rng.uniform(-spec.jitter_px, spec.jitter_px) : 0.0;
        p.orientation = wrap_degrees(c.orientation + angle + dtheta);
        p.distance = std::clamp(c.distance + dr, 0.0, 79.999);
        out.push_back(p);
    }
    return out;
}

FeatureTemplate rotate_template(const FeatureTemplate& t, int delta) {
    delta = ((delta % kSlots) + kSlots) % kSlots;
    FeatureTemplate out;
    for (int c = 0; c < kClasses; ++c) {
        for (int i = 0; i < kSlots; ++i) {
            const double a = t[c][static_cast<std::size_t>(i)];
            double& dst = out[c][static_cast<std::size_t>((i + delta) % kSlots)];
            if (a == 0.0) {
                dst = 0.0;
            } else {
                const double r = a + delta;
                dst = r > 360.0 ? r - 360.0 : r;
            }
        }
    }
    return out;
}

bool distinct_under_rotation(std::span<const FeatureTemplate> templates) {
    for (std::size_t i = 0; i < templates.size(); ++i)
        for (int d = 0; d < kSlots; ++d) {
            const auto r = rotate_template(templates[i], d);
            for (std::size_t j = 0; j < templates.size(); ++j)
                if (j != i && r == templates[j]) return false;
        }
    return true;
}

namespace {

std::string synthetic_id(std::size_t i) { return fmt::format("s{:03d}", i); }

double self_total(const FeatureTemplate& t, const Weights& w) {
    double total = 0.0;
    for (int c = 0; c < kClasses; ++c) total += w[c] * static_cast<double>(t.nonzero(c));
    return total;
}

struct TrialResult {
    double angle = 0.0;
    std::string raw_top;
    std::string normalized_top;
};

struct TrialTask {
    int rotations;
    std::size_t subject;
    int trial;
};

// Ranks once, then re-ranks by total / self-match total for the normalized
// variant (ties by ascending id, matching identify()).
TrialResult rank_query(const FeatureTemplate& query, std::span<const GalleryRecord> gallery,
                       const std::unordered_map<std::string, double>& self_totals, const Weights& w) {
    const auto ranked = identify(query, gallery, w, 1);
    TrialResult r;
    r.raw_top = ranked.front().subject_id;
    std::optional<std::pair<double, std::string>> best;
    for (const auto& c : ranked) {
        const double self = self_totals.at(c.subject_id);
        const double v = self > 0.0 ? c.score.total / self : 0.0;
        if (!best || v > best->first || (v == best->first && c.subject_id < best->second)) best = {v, c.subject_id};
    }
    r.normalized_top = best->second;
    return r;
}

template <typename QueryFn>
AccuracyReport run_protocol(std::span<const GalleryRecord> gallery, const ExperimentSpec& spec, QueryFn make_query) {
    std::unordered_map<std::string, double> self_totals;
    for (const auto& rec : gallery) self_totals[rec.subject_id] = self_total(rec.feature, spec.weights);

    std::vector<TrialTask> tasks;
    for (int rot : spec.rotations_per_query)
        for (std::size_t s = 0; s < gallery.size(); ++s)
            for (int t = 0; t < rot; ++t) tasks.push_back({rot, s, t});

    std::vector<TrialResult> results(tasks.size());
    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& task = tasks[i];
            Rng rng(derive_seed(spec.rng_seed, {static_cast<std::uint64_t>(task.rotations), task.subject,
                                                static_cast<std::uint64_t>(task.trial)}));
            double angle = rng.uniform(-spec.angle_range, spec.angle_range);
            if (spec.integer_angles) angle = std::round(angle);
            auto query = make_query(task.subject, angle, rng);
            results[i] = rank_query(query, gallery, self_totals, spec.weights);
            results[i].angle = angle;
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(spec.threads, 1, std::max<std::size_t>(tasks.size(), 1));
    if (workers == 1) {
        run(0, tasks.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (tasks.size() + workers - 1) / workers;
        for (std::size_t b = 0; b < tasks.size(); b += chunk) pool.emplace_back(run, b, std::min(tasks.size(), b + chunk));
    }

    AccuracyReport report;
    report.source_images = gallery.size();
    report.probes = tasks.size();
    std::size_t i = 0;
    for (int rot : spec.rotations_per_query) {
        AccuracyRow row;
        row.rotations = rot;
        std::size_t normalized_hits = 0;
        for (std::size_t s = 0; s < gallery.size(); ++s) {
            for (int t = 0; t < rot; ++t, ++i) {
                const auto& res = results[i];
                ++row.trials;
                if (res.raw_top == gallery[s].subject_id) {
                    ++row.hits;
                } else {
                    report.misidentified.push_back({rot, gallery[s].subject_id, res.angle, res.raw_top});
                }
                if (res.normalized_top == gallery[s].subject_id) ++normalized_hits;
            }
        }
        row.accuracy = 100.0 * static_cast<double>(row.hits) / static_cast<double>(row.trials);
        row.normalized_accuracy = 100.0 * static_cast<double>(normalized_hits) / static_cast<double>(row.trials);
        report.rows.push_back(row);
    }
    for (const auto& row : report.rows) {
        report.mean += row.accuracy;
        report.normalized_mean += row.normalized_accuracy;
    }
    report.mean /= static_cast<double>(report.rows.size());
    report.normalized_mean /= static_cast<double>(report.rows.size());
    return report;
}

}  // namespace

AccuracyReport rotation_experiment(std::span<const Constellation> subjects, const ExperimentSpec& spec) {
    spec.validate();
    if (subjects.size() < 2) throw Error("rotation experiment needs at least 2 subjects");
    std::vector<GalleryRecord> gallery;
    for (std::size_t i = 0; i < subjects.size(); ++i)
        gallery.push_back({synthetic_id(i), encode(subjects[i]), "synthetic", OdCenter{}});
    return run_protocol(gallery, spec, [&](std::size_t s, double angle, Rng& rng) {
        return encode(perturb(subjects[s], angle, spec, rng));
    });
}

std::vector<Constellation> synth_gallery(const ExperimentSpec& spec) {
    if (spec.n_subjects < 1) throw Error("synthetic gallery needs at least 1 subject");
    std::vector<Constellation> out;
    for (int s = 0; s < spec.n_subjects; ++s) {
        Rng rng(derive_seed(spec.rng_seed, {0xC0FFEEULL, static_cast<std::uint64_t>(s)}));
        out.push_back(synth_constellation(spec.n_corners, rng, spec.response_floor));
    }
    return out;
}

AccuracyReport rotation_experiment(const ExperimentSpec& spec) {
    const auto subjects = synth_gallery(spec);
    return rotation_experiment(subjects, spec);
}

bool read_od_sidecar(const std::filesystem::path& image, Point& out) {
    auto side = image;
    side += ".od";
    std::ifstream in(side);
    if (!in) return false;
    if (!(in >> out.x >> out.y)) throw Error("malformed optic disc sidecar '" + side.string() + "'");
    return true;
}

namespace {

std::string subject_from_stem(const std::filesystem::path& p) {
    std::string id = p.stem().string();
    for (char& c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) c = '_';
    if (id.size() > 64) id.resize(64);
    if (id.empty()) id = "_";
    return id;
}

FeatureTemplate encode_map(const IntensityMap& map, const OdCenter& od, const HarrisParams& harris) {
    const auto corners = detect_corners(map, harris);
    return encode(polarize(corners, od));
}

}  // namespace

AccuracyReport rotation_experiment(const std::filesystem::path& dir, const ExperimentSpec& spec,
                                   const ImagePipeline& pipeline) {
    namespace fs = std::filesystem;
    spec.validate();
    if (!fs::is_directory(dir)) throw Error("image directory '" + dir.string() + "' not found");
    std::vector<fs::path> images;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) images.push_back(e.path());
    }
    std::sort(images.begin(), images.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (images.size() < 2) throw Error("rotation experiment needs at least 2 subjects");

    std::vector<IntensityMap> maps;
    std::vector<OdCenter> centers;
    std::vector<GalleryRecord> gallery;
    for (const auto& path : images) {
        auto map = to_intensity(load_image(path));
        Point p;
        OdCenter od;
        try {
            od = read_od_sidecar(path, p) ? manual_od(p.x, p.y, map) : locate_od(map, pipeline.od);
        } catch (const Error& e) {
            throw Error("cannot resolve optic disc for '" + path.string() + "': " + e.what());
        }
        gallery.push_back({subject_from_stem(path), encode_map(map, od, pipeline.harris), path.filename().string(), od});
        maps.push_back(std::move(map));
        centers.push_back(od);
    }
    for (std::size_t i = 0; i < gallery.size(); ++i)
        for (std::size_t j = i + 1; j < gallery.size(); ++j)
            if (gallery[i].subject_id == gallery[j].subject_id) throw DuplicateSubjectError(gallery[i].subject_id);

    return run_protocol(gallery, spec, [&](std::size_t s, double angle, Rng&) {
        const auto rotated = rotate_about(maps[s], centers[s].position(), angle);
        return encode_map(rotated, centers[s], pipeline.harris);
    });
}

std::string format_report_table(const AccuracyReport& report) {
    std::string head = fmt::format("{:<24}", "Times of rotation");
    std::string acc = fmt::format("{:<24}", "Accuracy");
    std::string norm = fmt::format("{:<24}", "Accuracy (normalized)*");
    for (const auto& row : report.rows) {
        head += fmt::format("{:>10}", row.rotations);
        acc += fmt::format("{:>10}", fmt::format("{:.2f}%", row.accuracy));
        norm += fmt::format("{:>10}", fmt::format("{:.2f}%", row.normalized_accuracy));
    }
    head += fmt::format("{:>10}", "Mean");
    acc += fmt::format("{:>10}", fmt::format("{:.2f}%", report.mean));
    norm += fmt::format("{:>10}", fmt::format("{:.2f}%", report.normalized_mean));

    std::string out = head + "\n" + acc + "\n" + norm + "\n";
    out += fmt::format("source images: {}  probes: {}  misidentified: {}\n", report.source_images, report.probes,
                       report.misidentified.size());
    out += "* totals divided by the enrolled template's self-match total\n";
    return out;
}

std::string format_report_csv(const AccuracyReport& report) {
    std::string out = "rotations,accuracy_percent\n";
    for (const auto& row : report.rows) out += fmt::format("{},{:.4f}\n", row.rotations, row.accuracy);
    out += fmt::format("mean,{:.4f}\n", report.mean);
    return out;
}

std::vector<FarFrrRow> far_frr_sweep(const Gallery& gallery, std::span<const Probe> probes,
                                     std::span<const double> thresholds, const Weights& w) {
    if (gallery.records.empty() || probes.empty() || thresholds.empty())
        throw Error("far_frr_sweep: gallery, probes and thresholds must be nonempty");
    std::vector<double> genuine;
    std::vector<double> impostor;
    for (const auto& p : probes) {
        for (const auto& rec : gallery.records) {
            const double s = total_si(rec.feature, p.feature, w).total;
            (rec.subject_id == p.subject_id ? genuine : impostor).push_back(s);
        }
    }
    std::vector<FarFrrRow> out;
    out.reserve(thresholds.size());
    for (double th : thresholds) {
        const auto accepts = [th](const std::vector<double>& v) {
            return static_cast<double>(std::count_if(v.begin(), v.end(), [th](double s) { return s >= th; }));
        };
        FarFrrRow row{th, 0.0, 0.0};
        if (!impostor.empty()) row.far = 100.0 * accepts(impostor) / static_cast<double>(impostor.size());
        if (!genuine.empty())
            row.frr = 100.0 * (static_cast<double>(genuine.size()) - accepts(genuine)) / static_cast<double>(genuine.size());
        out.push_back(row);
    }
    return out;
}

std::vector<std::size_t> threshold_sweep(const IntensityMap& map, const HarrisParams& params,
                                         std::span<const double> thresholds) {
    params.validate();
    const auto g = gradients(map);
    const auto r = response(structure_tensor(g.gx, g.gy, params), params.k);
    std::vector<std::size_t> counts;
    for (double th : thresholds) {
        HarrisParams p = params;
        p.threshold = th;
        counts.push_back(local_maxima(r, p).size());
    }
    return counts;
}

namespace {

struct Segment {
    Point a;
    Point b;
    double half_width;
};

void grow_vessel(Rng& rng, Point start, double heading, double half_width, int depth, double max_len,
                 std::vector<Segment>& out, int width, int height) {
    constexpr double kStep = 6.0;
    Point p = start;
    double travelled = 0.0;
    while (travelled < max_len) {
        heading += rng.uniform(-0.25, 0.25);
        const Point q{p.x + kStep * std::cos(heading), p.y - kStep * std::sin(heading)};
        out.push_back({p, q, half_width});
        p = q;
        travelled += kStep;
        if (p.x < -10 || p.y < -10 || p.x > width + 10 || p.y > height + 10) return;
        if (depth < 3 && travelled > 12.0 && rng.uniform(0.0, 1.0) < 0.14) {
            const double side = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
            const double branch = heading + side * rng.uniform(0.45, 1.05);
            grow_vessel(rng, p, branch, std::max(1.0, half_width * 0.75), depth + 1, max_len * 0.55, out, width,
                        height);
            half_width = std::max(1.0, half_width * 0.9);
        }
    }
}

double distance_to_segment(Point p, const Segment& s) {
    const double vx = s.b.x - s.a.x;
    const double vy = s.b.y - s.a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((p.x - s.a.x) * vx + (p.y - s.a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (s.a.x + t * vx), p.y - (s.a.y + t * vy));
}

}  // namespace

SyntheticFundus synth_fundus(int width, int height, std::uint64_t seed) {
    if (width < 32 || height < 32) throw Error("synth_fundus: image must be at least 32x32");
    Rng rng(seed);
    const Point od{width / 2.0 + rng.uniform(-width / 10.0, width / 10.0),
                   height / 2.0 + rng.uniform(-height / 10.0, height / 10.0)};

    std::vector<Segment> segments;
    const int trunks = 4 + static_cast<int>(rng.uniform(0.0, 3.0));
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < trunks; ++i) {
        const double heading = phase + 2.0 * std::numbers::pi * i / trunks + rng.uniform(-0.3, 0.3);
        grow_vessel(rng, od, heading, rng.uniform(2.0, 2.8), 0, std::max(width, height) * 0.6, segments, width,
                    height);
    }

    Grid dark(width, height);
    for (const auto& s : segments) {
        const double pad = s.half_width + 2.0;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.a.x, s.b.x) - pad)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(s.a.x, s.b.x) + pad)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.a.y, s.b.y) - pad)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(s.a.y, s.b.y) + pad)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double d = distance_to_segment({static_cast<double>(x), static_cast<double>(y)}, s);
                const double cover = std::clamp(s.half_width + 0.5 - d, 0.0, 1.0);
                dark(x, y) = std::max(dark(x, y), cover);
            }
    }

    std::vector<double> values(static_cast<std::size_t>(width) * height);
    const double disc_scale = std::min(width, height) / 20.0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double r2 = (x - od.x) * (x - od.x) + (y - od.y) * (y - od.y);
            const double v = 110.0 + 90.0 * std::exp(-r2 / (2.0 * disc_scale * disc_scale)) - 55.0 * dark(x, y);
            values[static_cast<std::size_t>(y) * width + x] = std::clamp(v, 0.0, 255.0);
        }
    return {IntensityMap(width, height, std::move(values)), od};
}

}  // namespace retina
