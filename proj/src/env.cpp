#include "c2f/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

namespace c2f {

namespace {

using nlohmann::json;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::vector<double> make_features(std::mt19937_64& rng, const std::vector<double>& w,
                                  double gain, double gold, double r_max, double sigma) {
    std::normal_distribution<double> noise(0.0, sigma);
    const double amp = gain * std::abs(gold) / r_max;
    const double sgn = sign_of(gold);
    std::vector<double> feat(w.size());
    for (size_t j = 0; j < w.size(); ++j) {
        feat[j] = sgn * amp * w[j] + noise(rng);
    }
    return feat;
}

}  // namespace

void EnvConfig::validate() const {
    if (n_samples <= 0) throw ConfigError("env: n_samples must be > 0");
    if (d <= 0) throw ConfigError("env: d must be > 0");
    if (hard_fraction < 0.0 || hard_fraction > 1.0) {
        throw ConfigError("env: hard_fraction must lie in [0, 1]");
    }
    if (teacher_noise < 0.0) throw ConfigError("env: teacher_noise must be >= 0");
    if (noise_sigma < 0.0) throw ConfigError("env: noise_sigma must be >= 0");
    if (av_gain < 0.0) throw ConfigError("env: av_gain must be >= 0");
    profile.validate();
}

std::vector<double> modality_direction(int m, int d) {
    std::mt19937_64 rng(derive_seed(0xc2fd112ull, static_cast<std::uint64_t>(m)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> w(d);
    double norm2 = 0.0;
    for (auto& x : w) {
        x = gauss(rng);
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : w) x *= inv;
    return w;
}

std::vector<Sample> generate_dataset(const EnvConfig& cfg) {
    cfg.validate();

    const int n_hard = static_cast<int>(std::llround(cfg.hard_fraction * cfg.n_samples));
    std::vector<int> order(cfg.n_samples);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x5a1177ull));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::vector<char> hard(cfg.n_samples, 0);
    for (int i = 0; i < n_hard; ++i) hard[order[i]] = 1;

    const auto w_text = modality_direction(0, cfg.d);
    const auto w_audio = modality_direction(1, cfg.d);
    const auto w_vision = modality_direction(2, cfg.d);

    std::vector<Sample> samples;
    samples.reserve(cfg.n_samples);
    for (int i = 0; i < cfg.n_samples; ++i) {
        std::mt19937_64 rng(derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> uscore(cfg.profile.r_min, cfg.profile.r_max);

        Sample s;
        char idbuf[24];
        std::snprintf(idbuf, sizeof(idbuf), "s%06d", i);
        s.id = idbuf;
        s.gold_score = uscore(rng);
        s.gold_polarity = score_to_polarity(s.gold_score, cfg.profile);
        s.is_hard = hard[i] != 0;

        const double text_gain = s.is_hard ? -1.0 : 1.0;
        const double av_gain = cfg.av_gain;
        s.text_feat = make_features(rng, w_text, text_gain, s.gold_score,
                                    cfg.profile.r_max, cfg.noise_sigma);
        s.audio_feat = make_features(rng, w_audio, av_gain, s.gold_score,
                                     cfg.profile.r_max, cfg.noise_sigma);
        s.vision_feat = make_features(rng, w_vision, av_gain, s.gold_score,
                                      cfg.profile.r_max, cfg.noise_sigma);
        samples.push_back(std::move(s));
    }
    return samples;
}

CoTRecord teacher_generate_cot(const Sample& s, const EnvConfig& cfg,
                               const Vocabulary& vocab, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    double estimate = s.gold_score + cfg.teacher_noise * gauss(rng);
    estimate = std::clamp(estimate, cfg.profile.r_min, cfg.profile.r_max);

    const Polarity polarity = score_to_polarity(estimate, cfg.profile);
    const double snapped = vocab.snap_to_grid(estimate);

    const int d = static_cast<int>(s.text_feat.size());
    const int nt = vocab.n_think();
    StructuredOutput out;
    out.polarity = polarity;
    const std::vector<const std::vector<double>*> feats = {&s.text_feat, &s.audio_feat,
                                                           &s.vision_feat};
    for (int m = 0; m < 3; ++m) {
        const auto w = modality_direction(m, d);
        const int up = dot(*feats[m], w) >= 0.0 ? 1 : 0;
        out.think.push_back(vocab.surface(vocab.think_token((2 * m + up) % nt)));
    }
    out.think.push_back(vocab.surface(vocab.think_token((6 + (estimate >= 0.0 ? 1 : 0)) % nt)));
    out.score = snapped;

    return CoTRecord{s.id, vocab.encode(out)};
}

std::vector<CoTRecord> filter_and_relabel(const std::vector<CoTRecord>& candidates,
                                          const std::vector<Sample>& samples,
                                          const Vocabulary& vocab) {
    std::unordered_map<std::string, const Sample*> by_id;
    for (const auto& s : samples) by_id[s.id] = &s;

    std::vector<CoTRecord> kept;
    for (const auto& cand : candidates) {
        auto it = by_id.find(cand.sample_id);
        if (it == by_id.end()) {
            throw ConfigError("cot candidate references unknown sample " + cand.sample_id);
        }
        const Sample& gold = *it->second;

        const auto parsed = parse(vocab.text(cand.target_tokens), vocab.profile());
        if (!parsed.ok()) continue;
        if (parsed.value().polarity != gold.gold_polarity) continue;

        StructuredOutput relabeled = parsed.value();
        relabeled.score = vocab.snap_to_grid(gold.gold_score);
        kept.push_back(CoTRecord{cand.sample_id, vocab.encode(relabeled)});
    }
    return kept;
}

void save_samples(const std::string& path, const std::vector<Sample>& samples) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& s : samples) {
        json j;
        j["id"] = s.id;
        j["text_feat"] = s.text_feat;
        j["audio_feat"] = s.audio_feat;
        j["vision_feat"] = s.vision_feat;
        j["gold_score"] = s.gold_score;
        j["is_hard"] = s.is_hard;
        out << j.dump() << "\n";
    }
}

std::vector<Sample> load_samples(const std::string& path, const DatasetProfile& profile) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Sample> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        Sample s;
        s.id = j.at("id").get<std::string>();
        s.text_feat = j.at("text_feat").get<std::vector<double>>();
        s.audio_feat = j.at("audio_feat").get<std::vector<double>>();
        s.vision_feat = j.at("vision_feat").get<std::vector<double>>();
        s.gold_score = j.at("gold_score").get<double>();
        s.gold_polarity = score_to_polarity(s.gold_score, profile);
        s.is_hard = j.at("is_hard").get<bool>();
        samples.push_back(std::move(s));
    }
    return samples;
}

void save_cot_records(const std::string& path, const std::vector<CoTRecord>& records,
                      const Vocabulary& vocab) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& r : records) {
        json j;
        j["sample_id"] = r.sample_id;
        j["text"] = vocab.text(r.target_tokens);
        out << j.dump() << "\n";
    }
}

std::vector<CoTRecord> load_cot_records(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<CoTRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        const auto parsed = parse(j.at("text").get<std::string>(), vocab.profile());
        if (!parsed.ok()) {
            throw IoError("cot record for " + j.at("sample_id").get<std::string>() +
                          " does not parse");
        }
        records.push_back(CoTRecord{j.at("sample_id").get<std::string>(),
                                    vocab.encode(parsed.value())});
    }
    return records;
}

}  // namespace c2f
