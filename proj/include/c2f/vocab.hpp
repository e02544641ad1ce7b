#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "c2f/grammar.hpp"

namespace c2f {

// Token id layout, dense and stable for a fixed (profile, n_think):
//   [BOS, EOS, <polarity>, </polarity>, <think>, </think>, <score>, </score>,
//    negative, neutral, positive, t0..t{n_think-1}, score grid points]
// Score tokens are the 0.1-step grid on [r_min, r_max], held in integer
// hundredths so grid values and their 2-decimal surfaces match exactly.
class Vocabulary {
  public:
    Vocabulary(const DatasetProfile& profile, int n_think);

    int size() const { return static_cast<int>(surfaces_.size()); }
    const DatasetProfile& profile() const { return profile_; }
    int n_think() const { return n_think_; }
    int n_score() const { return grid_size_; }

    int bos() const { return 0; }
    int eos() const { return 1; }
    int tag_polarity_open() const { return 2; }
    int tag_polarity_close() const { return 3; }
    int tag_think_open() const { return 4; }
    int tag_think_close() const { return 5; }
    int tag_score_open() const { return 6; }
    int tag_score_close() const { return 7; }
    int polarity_token(Polarity p) const { return 8 + static_cast<int>(p); }
    int think_token(int i) const;
    int score_token(int grid_index) const;

    bool is_polarity_token(int id) const { return id >= 8 && id < 11; }
    bool is_think_token(int id) const { return id >= think_base_ && id < score_base_; }
    bool is_score_token(int id) const { return id >= score_base_ && id < size(); }
    bool in_range(int id) const { return id >= 0 && id < size(); }

    // Surface string; empty for BOS/EOS.
    const std::string& surface(int id) const;

    Polarity polarity_value(int id) const;  // VocabError unless polarity token
    double score_value(int id) const;       // VocabError unless score token

    int grid_size() const { return grid_size_; }
    double grid_value(int grid_index) const;
    int nearest_grid_index(double s) const;
    double snap_to_grid(double s) const { return grid_value(nearest_grid_index(s)); }

    // StructuredOutput <-> token ids. encode snaps the score to the nearest
    // grid point; unknown think tokens are a VocabError. decode requires a
    // complete well-formed sequence (tags in order, optional trailing EOS).
    std::vector<int> encode(const StructuredOutput& out) const;
    StructuredOutput decode(const std::vector<int>& tokens) const;

    // Surface concatenation for an arbitrary token sequence; adjacent think
    // tokens are space-separated so well-formed sequences reproduce render().
    std::string text(const std::vector<int>& tokens) const;

    // Stable digest of surfaces and bounds; checkpoints store it so loading
    // against a mismatched vocabulary fails loudly.
    std::uint64_t hash() const { return hash_; }

  private:
    DatasetProfile profile_;
    int n_think_ = 0;
    int grid_size_ = 0;
    int think_base_ = 0;
    int score_base_ = 0;
    long long centi_min_ = 0;
    std::vector<std::string> surfaces_;
    std::unordered_map<std::string, int> think_ids_;
    std::uint64_t hash_ = 0;
};

}  // namespace c2f
