#include "retina/store.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "retina/error.hpp"

namespace retina {

const GalleryRecord* Gallery::find(std::string_view subject_id) const {
    for (const auto& r : records)
        if (r.subject_id == subject_id) return &r;
    return nullptr;
}

bool is_valid_subject_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

void validate_record(const GalleryRecord& record) {
    if (!is_valid_subject_id(record.subject_id))
        throw Error("invalid subject id '" + record.subject_id + "' (expected [A-Za-z0-9_-], 1-64 chars)");
    if (record.source_image.find_first_of("\r\n") != std::string::npos)
        throw Error("image provenance must be a single line");
    if (!record.feature.is_valid()) throw Error("template amplitudes must be 0 or in (0, 360]");
    if (!(record.od.x >= 0.0 && record.od.y >= 0.0)) throw Error("optic disc center must be non-negative");
}

std::string format_number(double value) {
    std::string s = fmt::format("{:.9f}", value);
    if (auto dot = s.find('.'); dot != std::string::npos) {
        auto last = s.find_last_not_of('0');
        s.erase(last == dot ? dot : last + 1);
    }
    if (s == "-0") s = "0";
    return s;
}

namespace {

std::string format_amplitude(double a) {
    if (a == 0.0) return "0";
    auto s = format_number(a);
    // Positive amplitudes below the printed resolution must not read back as empty.
    return s == "0" ? "0.000000001" : s;
}

}  // namespace

void write_record(std::ostream& out, const GalleryRecord& record) { out << format_record(record); }

std::string format_record(const GalleryRecord& record) {
    validate_record(record);
    std::string s;
    s.reserve(4 * 1024);
    s += kTemplateMagic;
    s += "\nsubject " + record.subject_id;
    s += "\nod " + format_number(record.od.x) + " " + format_number(record.od.y) + " " +
         std::string(to_string(record.od.source));
    s += record.source_image.empty() ? std::string("\nimage") : "\nimage " + record.source_image;
    s += '\n';
    for (int c = 0; c < kClasses; ++c) {
        const auto& v = record.feature[c];
        for (int i = 0; i < kSlots; ++i) {
            if (i) s += ' ';
            s += format_amplitude(v[static_cast<std::size_t>(i)]);
        }
        s += '\n';
    }
    return s;
}

namespace {

class LineCursor {
public:
    LineCursor(std::string_view text, const std::string& source) : text_(text), source_(source) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        auto end = text_.find('\n', pos_);
        if (end == std::string_view::npos) end = text_.size();
        line = text_.substr(pos_, end - pos_);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos_ = end + 1;
        ++line_no_;
        return true;
    }

    std::string_view require(const char* what) {
        std::string_view line;
        if (!next(line)) fail(std::string("unexpected end of file, expected ") + what);
        return line;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

private:
    std::string_view text_;
    const std::string& source_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

bool parse_double(std::string_view tok, double& out) {
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out, std::chars_format::fixed);
    return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<GalleryRecord> parse_records(std::string_view text, const std::string& source) {
    std::vector<GalleryRecord> records;
    LineCursor cur(text, source);
    std::string_view line;
    while (cur.next(line)) {
        if (split_ws(line).empty()) continue;
        if (line != kTemplateMagic) cur.fail("expected '" + std::string(kTemplateMagic) + "'");

        GalleryRecord r;
        auto subject = cur.require("subject line");
        if (!subject.starts_with("subject ")) cur.fail("expected 'subject <id>'");
        r.subject_id = std::string(subject.substr(8));
        if (!is_valid_subject_id(r.subject_id)) cur.fail("invalid subject id '" + r.subject_id + "'");

        auto od = split_ws(cur.require("od line"));
        if (od.size() != 4 || od[0] != "od") cur.fail("expected 'od <x> <y> <source>'");
        if (!parse_double(od[1], r.od.x) || !parse_double(od[2], r.od.y) || r.od.x < 0 || r.od.y < 0)
            cur.fail("invalid optic disc coordinates");
        try {
            r.od.source = od_source_from_string(od[3]);
        } catch (const Error&) {
            cur.fail("unknown optic disc source '" + std::string(od[3]) + "'");
        }
        r.od.score = r.od.source == OdSource::manual ? 1.0 : 0.0;

        auto image = cur.require("image line");
        if (image == "image") {
            r.source_image.clear();
        } else if (image.starts_with("image ")) {
            r.source_image = std::string(image.substr(6));
        } else {
            cur.fail("expected 'image <text>'");
        }

        for (int c = 0; c < kClasses; ++c) {
            auto toks = split_ws(cur.require("amplitude line"));
            if (toks.size() != static_cast<std::size_t>(kSlots))
                cur.fail("expected 360 amplitudes, found " + std::to_string(toks.size()));
            auto& vec = r.feature[c];
            for (int i = 0; i < kSlots; ++i) {
                double a = 0.0;
                const auto tok = toks[static_cast<std::size_t>(i)];
                if (!parse_double(tok, a) || !(a == 0.0 || (a > 0.0 && a <= 360.0)))
                    cur.fail("invalid amplitude '" + std::string(tok) + "' in slot " + std::to_string(i));
                vec[static_cast<std::size_t>(i)] = a;
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

void save_template(const GalleryRecord& record, const std::filesystem::path& path) {
    const auto text = format_record(record);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

Gallery load_gallery(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::exists(path, ec)) throw Error("gallery path '" + path.string() + "' does not exist");

    std::vector<fs::path> files;
    if (fs::is_directory(path, ec)) {
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == kTemplateExtension) files.push_back(entry.path());
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    } else {
        files.push_back(path);
    }

    Gallery g;
    std::unordered_set<std::string> seen;
    for (const auto& f : files) {
        for (auto& r : parse_records(read_file(f), f.string())) {
            if (!seen.insert(r.subject_id).second) throw DuplicateSubjectError(r.subject_id);
            g.records.push_back(std::move(r));
        }
    }
    if (g.records.empty()) throw EmptyGalleryError();
    return g;
}

}  // namespace retina
