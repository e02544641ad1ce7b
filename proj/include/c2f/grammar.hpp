#pragma once

#include <optional>
#include <string>
#include <vector>

#include "c2f/common.hpp"

namespace c2f {

// Ordered so Negative < Neutral < Positive; score_to_polarity is monotone
// under this ordering.
enum class Polarity : int { Negative = 0, Neutral = 1, Positive = 2 };

const char* to_string(Polarity p);
std::optional<Polarity> polarity_from_string(const std::string& s);

// Score bounds plus the class-binning rules for one dataset family.
// class_edges_acc7 non-empty marks the MOSI family (Acc7 supported),
// class_edges_acc5 non-empty the SIMS family (Acc5 supported).
struct DatasetProfile {
    std::string name = "synth-sims";
    double r_min = -1.0;
    double r_max = 1.0;
    std::vector<double> class_edges_acc7;
    std::vector<double> class_edges_acc5;
    double neutral_band = 0.0;

    double range() const { return r_max - r_min; }
    bool contains(double s) const { return s >= r_min && s <= r_max; }
    void validate() const;  // throws ConfigError

    static DatasetProfile mosi();
    static DatasetProfile sims();
};

// Negative below -band, Positive above +band, Neutral inside.
Polarity score_to_polarity(double score, const DatasetProfile& profile);

struct StructuredOutput {
    Polarity polarity = Polarity::Neutral;
    std::vector<std::string> think;
    double score = 0.0;

    bool operator==(const StructuredOutput&) const = default;
};

// "<polarity>P</polarity><think>T</think><score>S</score>", score with two
// decimal places, think tokens space-separated.
std::string render(const StructuredOutput& out);

struct FormatError {
    enum class Code {
        MissingTag,
        WrongOrder,
        BadPolarity,
        BadScore,
        ScoreOutOfRange,
        TrailingContent,
    };
    Code code = Code::MissingTag;
    std::string detail;
};

const char* to_string(FormatError::Code c);

class ParseResult {
  public:
    ParseResult(StructuredOutput v) : value_(std::move(v)) {}
    ParseResult(FormatError e) : error_(std::move(e)) {}

    bool ok() const { return value_.has_value(); }
    const StructuredOutput& value() const { return *value_; }
    const FormatError& error() const { return *error_; }

  private:
    std::optional<StructuredOutput> value_;
    std::optional<FormatError> error_;
};

// Accepts exactly one polarity/think/score block in that order, a canonical
// polarity string, and a plain decimal score (at most 6 fractional digits)
// within the profile bounds. First violated rule wins. Leading/trailing
// whitespace is trimmed; no other repair.
ParseResult parse(const std::string& text, const DatasetProfile& profile);

}  // namespace c2f
