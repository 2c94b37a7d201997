#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "retina/matcher.hpp"

namespace retina {

// Template file (.rtpl), one 7-line block per record, LF endings:
//
//   RETINA-TEMPLATE v1
//   subject <id>
//   od <x> <y> <detected|manual>
//   image <free text>
//   <360 amplitudes, ring 1>
//   <360 amplitudes, ring 2>
//   <360 amplitudes, ring 3>
//
// Numbers are fixed-point with at most 9 fractional digits and trailing zeros
// trimmed; empty slots print as 0. Blank lines between blocks are ignored.
// The disc correlation score is not stored: loaded manual centers carry 1,
// loaded detected centers carry 0.

inline constexpr std::string_view kTemplateMagic = "RETINA-TEMPLATE v1";
inline constexpr std::string_view kTemplateExtension = ".rtpl";

struct Gallery {
    std::vector<GalleryRecord> records;

    const GalleryRecord* find(std::string_view subject_id) const;
};

// [A-Za-z0-9_-]{1,64}
bool is_valid_subject_id(std::string_view id);

// Validates id, provenance text and template; throws retina::Error.
void validate_record(const GalleryRecord& record);

std::string format_number(double value);

void write_record(std::ostream& out, const GalleryRecord& record);
std::string format_record(const GalleryRecord& record);

// Parses every block in `text`; `source` labels diagnostics.
std::vector<GalleryRecord> parse_records(std::string_view text, const std::string& source);

void save_template(const GalleryRecord& record, const std::filesystem::path& path);

// A directory loads every *.rtpl inside it in byte-wise filename order; a file
// loads its blocks in order. Duplicate ids and empty results are errors.
Gallery load_gallery(const std::filesystem::path& path);

}  // namespace retina
