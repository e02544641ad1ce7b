#include "c2f/vocab.hpp"

#include <cmath>

namespace c2f {

Vocabulary::Vocabulary(const DatasetProfile& profile, int n_think)
    : profile_(profile), n_think_(n_think) {
    profile_.validate();
    if (n_think_ < 1) throw ConfigError("vocabulary: n_think must be >= 1");

    centi_min_ = std::llround(profile_.r_min * 100.0);
    const long long centi_max = std::llround(profile_.r_max * 100.0);
    grid_size_ = static_cast<int>((centi_max - centi_min_) / 10) + 1;
    if (grid_size_ < 2) throw ConfigError("vocabulary: score grid has fewer than 2 points");

    surfaces_ = {"", "", "<polarity>", "</polarity>", "<think>", "</think>",
                 "<score>", "</score>", "negative", "neutral", "positive"};
    think_base_ = static_cast<int>(surfaces_.size());
    for (int i = 0; i < n_think_; ++i) {
        surfaces_.push_back("t" + std::to_string(i));
        think_ids_[surfaces_.back()] = think_base_ + i;
    }
    score_base_ = static_cast<int>(surfaces_.size());
    for (int i = 0; i < grid_size_; ++i) {
        surfaces_.push_back(format_fixed(grid_value(i), 2));
    }

    std::string blob = profile_.name + "|" + format_double(profile_.r_min) + "|" +
                       format_double(profile_.r_max);
    for (const auto& s : surfaces_) {
        blob += '\x1f';
        blob += s;
    }
    hash_ = fnv1a(blob);
}

int Vocabulary::think_token(int i) const {
    if (i < 0 || i >= n_think_) throw VocabError("think token index out of range");
    return think_base_ + i;
}

int Vocabulary::score_token(int grid_index) const {
    if (grid_index < 0 || grid_index >= grid_size_) {
        throw VocabError("score grid index out of range");
    }
    return score_base_ + grid_index;
}

const std::string& Vocabulary::surface(int id) const {
    if (!in_range(id)) throw VocabError("token id out of range");
    return surfaces_[id];
}

Polarity Vocabulary::polarity_value(int id) const {
    if (!is_polarity_token(id)) throw VocabError("not a polarity token");
    return static_cast<Polarity>(id - 8);
}

double Vocabulary::score_value(int id) const {
    if (!is_score_token(id)) throw VocabError("not a score token");
    return grid_value(id - score_base_);
}

double Vocabulary::grid_value(int grid_index) const {
    return static_cast<double>(centi_min_ + 10ll * grid_index) / 100.0;
}

int Vocabulary::nearest_grid_index(double s) const {
    const double step = 0.1;
    int idx = static_cast<int>(std::lround((s - profile_.r_min) / step));
    if (idx < 0) idx = 0;
    if (idx >= grid_size_) idx = grid_size_ - 1;
    return idx;
}

std::vector<int> Vocabulary::encode(const StructuredOutput& out) const {
    std::vector<int> ids;
    ids.reserve(out.think.size() + 10);
    ids.push_back(tag_polarity_open());
    ids.push_back(polarity_token(out.polarity));
    ids.push_back(tag_polarity_close());
    ids.push_back(tag_think_open());
    for (const auto& tok : out.think) {
        auto it = think_ids_.find(tok);
        if (it == think_ids_.end()) throw VocabError("unknown think token \"" + tok + "\"");
        ids.push_back(it->second);
    }
    ids.push_back(tag_think_close());
    ids.push_back(tag_score_open());
    ids.push_back(score_token(nearest_grid_index(out.score)));
    ids.push_back(tag_score_close());
    ids.push_back(eos());
    return ids;
}

StructuredOutput Vocabulary::decode(const std::vector<int>& tokens) const {
    size_t i = 0;
    auto need = [&](int id) {
        if (i >= tokens.size() || tokens[i] != id) {
            throw VocabError("malformed token sequence");
        }
        ++i;
    };
    StructuredOutput out;
    need(tag_polarity_open());
    if (i >= tokens.size() || !is_polarity_token(tokens[i])) {
        throw VocabError("malformed token sequence");
    }
    out.polarity = polarity_value(tokens[i++]);
    need(tag_polarity_close());
    need(tag_think_open());
    while (i < tokens.size() && is_think_token(tokens[i])) {
        out.think.push_back(surfaces_[tokens[i++]]);
    }
    need(tag_think_close());
    need(tag_score_open());
    if (i >= tokens.size() || !is_score_token(tokens[i])) {
        throw VocabError("malformed token sequence");
    }
    out.score = score_value(tokens[i++]);
    need(tag_score_close());
    if (i < tokens.size() && tokens[i] == eos()) ++i;
    if (i != tokens.size()) throw VocabError("malformed token sequence");
    return out;
}

std::string Vocabulary::text(const std::vector<int>& tokens) const {
    std::string s;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0 && is_think_token(tokens[i - 1]) && is_think_token(tokens[i])) {
            s += ' ';
        }
        s += surface(tokens[i]);
    }
    return s;
}

}  // namespace c2f
