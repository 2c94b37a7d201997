#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "retina/encoder.hpp"
#include "retina/optic_disc.hpp"

namespace retina {

// Scale weights for the three rings; defaults 1, 2, 4.
struct Weights {
    double w1 = 1.0;
    double w2 = 2.0;
    double w3 = 4.0;

    double operator[](int class_index) const { return class_index == 0 ? w1 : class_index == 1 ? w2 : w3; }
    void validate() const;
};

// Modified correlation of one ring at every circular shift. values[phi - 1]
// holds the similarity at shift phi in 1..360; phi = 360 is the zero shift.
struct SimilarityProfile {
    std::array<double, kSlots> values{};

    double at_shift(int phi) const { return values[static_cast<std::size_t>(phi - 1)]; }
};

struct MatchScore {
    std::array<double, kClasses> si{};
    std::array<int, kClasses> best_shift{1, 1, 1};
    double total = 0.0;
};

// One enrolled subject.
struct GalleryRecord {
    std::string subject_id;
    FeatureTemplate feature;
    std::string source_image;
    OdCenter od;
};

struct Candidate {
    std::string subject_id;
    MatchScore score;
};

enum class Decision { accept, reject };

struct Verification {
    Decision decision = Decision::reject;
    MatchScore score;
};

// Sim(phi) = sum over tau of step(in[tau] * out[tau + phi]) * cos(2 (in[tau] - out[tau + phi]))
// with amplitudes in degrees and indices taken modulo 360.
SimilarityProfile sim_profile(std::span<const double> enrolled, std::span<const double> query);

struct ClassIndex {
    double si = 0.0;
    int best_shift = 1;
};

// Maximum of the profile and the smallest shift attaining it.
ClassIndex si_class(const SimilarityProfile& profile);

MatchScore total_si(const FeatureTemplate& enrolled, const FeatureTemplate& query, const Weights& w);

// Scores the query against every record and ranks by descending total, ties
// by ascending subject id. Records are scored on up to `threads` workers;
// the result does not depend on the thread count.
std::vector<Candidate> identify(const FeatureTemplate& query, std::span<const GalleryRecord> gallery,
                                const Weights& w, unsigned threads = 1);

Verification verify(const FeatureTemplate& query, const GalleryRecord& enrolled, double threshold, const Weights& w);

}  // namespace retina
