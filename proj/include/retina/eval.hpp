#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "retina/encoder.hpp"
#include "retina/harris.hpp"
#include "retina/matcher.hpp"
#include "retina/optic_disc.hpp"
#include "retina/store.hpp"

namespace retina {

// Seeded generator with a platform-independent uniform draw (the standard
// distributions are not specified bit-for-bit across library vendors).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [lo, hi).
    double uniform(double lo, double hi);
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Mixes a seed with stream coordinates so every (subject, trial) pair owns an
// independent, reproducible stream.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords);

struct ExperimentSpec {
    std::vector<int> rotations_per_query{5, 10, 20};
    double angle_range = 15.0;
    double jitter_px = 0.5;
    double jitter_deg = 0.5;
    std::uint64_t rng_seed = 42;
    bool integer_angles = false;
    // Synthetic source only.
    int n_subjects = 50;
    int n_corners = 20;
    double response_floor = 7e4;
    Weights weights;
    unsigned threads = 1;

    void validate() const;
};

struct Misidentification {
    int rotations = 0;
    std::string subject_id;
    double angle = 0.0;
    std::string predicted_id;
};

struct AccuracyRow {
    int rotations = 0;
    std::size_t trials = 0;
    std::size_t hits = 0;
    double accuracy = 0.0;             // percent, raw totals
    double normalized_accuracy = 0.0;  // percent, totals / enrolled self-match total
};

struct AccuracyReport {
    std::vector<AccuracyRow> rows;
    double mean = 0.0;
    double normalized_mean = 0.0;
    std::size_t source_images = 0;
    std::size_t probes = 0;
    std::vector<Misidentification> misidentified;
};

using Constellation = std::vector<PolarCorner>;

// n corners with distance in [5, 79), orientation in [0, 360) and response in
// [floor, 10 floor).
Constellation synth_constellation(int n_corners, Rng& rng, double response_floor = 7e4);

// Rotates every orientation by angle (plus jitter) and jitters distances,
// clamped to [0, 79.999]. Corners may change ring.
Constellation perturb(std::span<const PolarCorner> corners, double angle, const ExperimentSpec& spec, Rng& rng);

// Encoding of a template rotated by an integer number of degrees: vectors
// circularly shifted by delta slots, amplitudes advanced by delta in (0, 360].
FeatureTemplate rotate_template(const FeatureTemplate& t, int delta);

// True when no template equals another one rotated by any integer degree.
bool distinct_under_rotation(std::span<const FeatureTemplate> templates);

// Enrolls each constellation as subject s000, s001, ... and runs the rotation
// protocol on the polar sets.
AccuracyReport rotation_experiment(std::span<const Constellation> subjects, const ExperimentSpec& spec);

// Synthetic gallery of spec.n_subjects constellations.
std::vector<Constellation> synth_gallery(const ExperimentSpec& spec);
AccuracyReport rotation_experiment(const ExperimentSpec& spec);

struct ImagePipeline {
    HarrisParams harris;
    OdParams od;
};

// One subject per image in `dir` (*.pgm, *.ppm, *.pnm, byte order). The disc
// center comes from a `<image>.od` sidecar ("x y") when present, otherwise
// from locate_od. Queries rotate the image about the disc center and are
// re-detected and re-encoded.
AccuracyReport rotation_experiment(const std::filesystem::path& dir, const ExperimentSpec& spec,
                                   const ImagePipeline& pipeline);

std::string format_report_table(const AccuracyReport& report);
std::string format_report_csv(const AccuracyReport& report);

struct Probe {
    std::string subject_id;
    FeatureTemplate feature;
};

struct FarFrrRow {
    double threshold = 0.0;
    double far = 0.0;  // percent
    double frr = 0.0;  // percent
};

std::vector<FarFrrRow> far_frr_sweep(const Gallery& gallery, std::span<const Probe> probes,
                                     std::span<const double> thresholds, const Weights& w = {});

// Corner counts per detection threshold on one map, strongest-first order
// irrelevant. Used to re-tune the threshold on new imagery.
std::vector<std::size_t> threshold_sweep(const IntensityMap& map, const HarrisParams& params,
                                         std::span<const double> thresholds);

struct SyntheticFundus {
    IntensityMap map;
    Point od;
};

// Fundus-like test image: mid-gray field, bright disc blob, dark branching
// vessel tree rooted at the disc.
SyntheticFundus synth_fundus(int width, int height, std::uint64_t seed);

// Reads an "x y" sidecar next to an image; returns false when absent.
bool read_od_sidecar(const std::filesystem::path& image, Point& out);

}  // namespace retina
