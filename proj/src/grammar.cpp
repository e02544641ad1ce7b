#include "c2f/grammar.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <sstream>

namespace c2f {

namespace {

constexpr const char* kTagPolarityOpen = "<polarity>";
constexpr const char* kTagPolarityClose = "</polarity>";
constexpr const char* kTagThinkOpen = "<think>";
constexpr const char* kTagThinkClose = "</think>";
constexpr const char* kTagScoreOpen = "<score>";
constexpr const char* kTagScoreClose = "</score>";

const std::array<const char*, 6> kAllTags = {
    kTagPolarityOpen, kTagPolarityClose, kTagThinkOpen,
    kTagThinkClose,   kTagScoreOpen,     kTagScoreClose,
};

bool starts_with(const std::string& s, size_t pos, const char* lit) {
    return s.compare(pos, std::strlen(lit), lit) == 0;
}

bool starts_with_any_tag(const std::string& s, size_t pos) {
    for (const char* tag : kAllTags) {
        if (starts_with(s, pos, tag)) return true;
    }
    return false;
}

std::string trimmed(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Plain decimal: optional sign, digits, optional '.' with 1..6 digits.
bool parse_plain_decimal(const std::string& s, double& out) {
    if (s.empty()) return false;
    size_t i = 0;
    if (s[i] == '+' || s[i] == '-') ++i;
    size_t int_begin = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == int_begin) return false;
    if (i < s.size() && s[i] == '.') {
        ++i;
        size_t frac_begin = i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        size_t frac_len = i - frac_begin;
        if (frac_len < 1 || frac_len > 6) return false;
    }
    if (i != s.size()) return false;
    out = std::strtod(s.c_str(), nullptr);
    return true;
}

// Expects `tag` exactly at `pos`. On mismatch classifies the failure.
std::optional<FormatError> expect_tag(const std::string& s, size_t& pos, const char* tag) {
    if (starts_with(s, pos, tag)) {
        pos += std::strlen(tag);
        return std::nullopt;
    }
    if (starts_with_any_tag(s, pos)) {
        return FormatError{FormatError::Code::WrongOrder,
                           std::string("expected ") + tag};
    }
    if (pos >= s.size()) {
        return FormatError{FormatError::Code::MissingTag,
                           std::string("missing ") + tag};
    }
    return FormatError{FormatError::Code::TrailingContent,
                       std::string("unexpected content before ") + tag};
}

}  // namespace

const char* to_string(Polarity p) {
    switch (p) {
        case Polarity::Negative: return "negative";
        case Polarity::Neutral: return "neutral";
        case Polarity::Positive: return "positive";
    }
    return "neutral";
}

std::optional<Polarity> polarity_from_string(const std::string& s) {
    if (s == "negative") return Polarity::Negative;
    if (s == "neutral") return Polarity::Neutral;
    if (s == "positive") return Polarity::Positive;
    return std::nullopt;
}

void DatasetProfile::validate() const {
    if (!(r_min < r_max)) throw ConfigError("profile: r_min must be < r_max");
    if (neutral_band < 0.0) throw ConfigError("profile: neutral_band must be >= 0");
    for (const auto* edges : {&class_edges_acc7, &class_edges_acc5}) {
        for (size_t i = 1; i < edges->size(); ++i) {
            if (!((*edges)[i - 1] < (*edges)[i])) {
                throw ConfigError("profile: class edges must be strictly increasing");
            }
        }
    }
}

DatasetProfile DatasetProfile::mosi() {
    DatasetProfile p;
    p.name = "mosi";
    p.r_min = -3.0;
    p.r_max = 3.0;
    p.class_edges_acc7 = {-2.5, -1.5, -0.5, 0.5, 1.5, 2.5};
    p.class_edges_acc5 = {};
    p.neutral_band = 0.0;
    return p;
}

DatasetProfile DatasetProfile::sims() {
    DatasetProfile p;
    p.name = "sims";
    p.r_min = -1.0;
    p.r_max = 1.0;
    p.class_edges_acc7 = {};
    p.class_edges_acc5 = {-0.7, -0.1, 0.1, 0.7};
    p.neutral_band = 0.1;
    return p;
}

Polarity score_to_polarity(double score, const DatasetProfile& profile) {
    if (score < -profile.neutral_band) return Polarity::Negative;
    if (score > profile.neutral_band) return Polarity::Positive;
    return Polarity::Neutral;
}

std::string render(const StructuredOutput& out) {
    std::string think;
    for (size_t i = 0; i < out.think.size(); ++i) {
        if (i > 0) think += ' ';
        think += out.think[i];
    }
    std::string s;
    s += kTagPolarityOpen;
    s += to_string(out.polarity);
    s += kTagPolarityClose;
    s += kTagThinkOpen;
    s += think;
    s += kTagThinkClose;
    s += kTagScoreOpen;
    s += format_fixed(out.score, 2);
    s += kTagScoreClose;
    return s;
}

const char* to_string(FormatError::Code c) {
    switch (c) {
        case FormatError::Code::MissingTag: return "MissingTag";
        case FormatError::Code::WrongOrder: return "WrongOrder";
        case FormatError::Code::BadPolarity: return "BadPolarity";
        case FormatError::Code::BadScore: return "BadScore";
        case FormatError::Code::ScoreOutOfRange: return "ScoreOutOfRange";
        case FormatError::Code::TrailingContent: return "TrailingContent";
    }
    return "MissingTag";
}

ParseResult parse(const std::string& raw, const DatasetProfile& profile) {
    const std::string text = trimmed(raw);
    size_t pos = 0;

    if (auto err = expect_tag(text, pos, kTagPolarityOpen)) return *err;
    size_t close = text.find(kTagPolarityClose, pos);
    if (close == std::string::npos) {
        return FormatError{FormatError::Code::MissingTag,
                           std::string("missing ") + kTagPolarityClose};
    }
    const std::string pol_text = text.substr(pos, close - pos);
    auto polarity = polarity_from_string(pol_text);
    if (!polarity) {
        return FormatError{FormatError::Code::BadPolarity,
                           "unrecognized polarity \"" + pol_text + "\""};
    }
    pos = close + std::strlen(kTagPolarityClose);

    if (auto err = expect_tag(text, pos, kTagThinkOpen)) return *err;
    close = text.find(kTagThinkClose, pos);
    if (close == std::string::npos) {
        return FormatError{FormatError::Code::MissingTag,
                           std::string("missing ") + kTagThinkClose};
    }
    const std::string think_text = text.substr(pos, close - pos);
    for (const char* tag : kAllTags) {
        if (think_text.find(tag) != std::string::npos) {
            return FormatError{FormatError::Code::WrongOrder,
                               "tag inside think block"};
        }
    }
    std::vector<std::string> think;
    {
        std::istringstream iss(think_text);
        std::string tok;
        while (iss >> tok) think.push_back(tok);
    }
    pos = close + std::strlen(kTagThinkClose);

    if (auto err = expect_tag(text, pos, kTagScoreOpen)) return *err;
    close = text.find(kTagScoreClose, pos);
    if (close == std::string::npos) {
        return FormatError{FormatError::Code::MissingTag,
                           std::string("missing ") + kTagScoreClose};
    }
    const std::string score_text = text.substr(pos, close - pos);
    double score = 0.0;
    if (!parse_plain_decimal(score_text, score)) {
        return FormatError{FormatError::Code::BadScore,
                           "unparseable score \"" + score_text + "\""};
    }
    if (!profile.contains(score)) {
        return FormatError{FormatError::Code::ScoreOutOfRange,
                           "score " + score_text + " outside [" +
                               format_double(profile.r_min) + ", " +
                               format_double(profile.r_max) + "]"};
    }
    pos = close + std::strlen(kTagScoreClose);

    if (pos != text.size()) {
        return FormatError{FormatError::Code::TrailingContent,
                           "content after " + std::string(kTagScoreClose)};
    }

    StructuredOutput out;
    out.polarity = *polarity;
    out.think = std::move(think);
    out.score = score;
    return out;
}

}  // namespace c2f
