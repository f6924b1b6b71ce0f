#include "mgml/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mgml {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (runs < 1) throw ConfigError("train.runs must be >= 1");
    if (base_lr <= 0.0) throw ConfigError("optimizer.lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
        throw ConfigError("optimizer.momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("optimizer.weight_decay must be >= 0");
    if (lr_factor <= 0.0) throw ConfigError("schedule.factor must be > 0");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class KeyValues {
public:
    explicit KeyValues(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  " is not 'key = value': " + line);
            }
            const std::string key = trim(line.substr(0, eq));
            if (!values_.emplace(key, trim(line.substr(eq + 1))).second) {
                throw ConfigError("duplicate config key '" + key + "'");
            }
        }
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string required(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            throw ConfigError("missing required config key '" + key + "'");
        }
        used_.insert(key);
        return it->second;
    }

    std::string get(const std::string& key, const std::string& fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return to_double(key, required(key));
    }

    int get_int(const std::string& key, int fallback) {
        if (!has(key)) return fallback;
        return to_int(key, required(key));
    }

    int required_int(const std::string& key) { return to_int(key, required(key)); }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const std::string v = required(key);
        try {
            return std::stoull(v);
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' is not an integer: " + v);
        }
    }

    std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) {
        if (!has(key)) return fallback;
        const std::string v = required(key);
        std::vector<int> out;
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!trim(tok).empty()) out.push_back(to_int(key, trim(tok)));
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_) {
            if (!used_.count(key)) throw ConfigError("unknown config key '" + key + "'");
        }
    }

private:
    double to_double(const std::string& key, const std::string& v) {
        try {
            std::size_t end = 0;
            const double d = std::stod(v, &end);
            if (end != v.size()) throw std::invalid_argument("");
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' is not a number: " + v);
        }
    }

    int to_int(const std::string& key, const std::string& v) {
        try {
            std::size_t end = 0;
            const int i = std::stoi(v, &end);
            if (end != v.size()) throw std::invalid_argument("");
            return i;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' is not an integer: " + v);
        }
    }

    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

} // namespace

RunConfig parse_config_text(const std::string& text) {
    KeyValues kv(text);
    RunConfig cfg;

    cfg.model.backbone = BackboneConfig::preset(kv.required("backbone.preset"));
    const std::string strategy = kv.get("crop.strategy", "7crop");
    if (strategy == "7crop") {
        cfg.model.crop.strategy = CropStrategy::SevenCrop;
    } else if (strategy == "grid") {
        cfg.model.crop.strategy = CropStrategy::GridCrop;
    } else {
        throw ConfigError("crop.strategy must be '7crop' or 'grid', got " + strategy);
    }
    cfg.model.crop.sigma = kv.get_double("crop.sigma", 0.5);
    cfg.model.crop.grid_k = kv.get_int("crop.k", 2);
    cfg.model.num_classes = kv.required_int("num_classes");
    for (int i = 0; i < 4; ++i) {
        cfg.model.lambda[i] = kv.get_double("lambda." + std::to_string(i + 1),
                                            cfg.model.lambda[i]);
    }

    cfg.train.base_lr = kv.get_double("optimizer.lr", 0.005);
    cfg.train.momentum = kv.get_double("optimizer.momentum", 0.9);
    cfg.train.weight_decay = kv.get_double("optimizer.weight_decay", 0.0005);
    cfg.train.milestones = kv.get_int_list("schedule.milestones", {90, 150});
    cfg.train.lr_factor = kv.get_double("schedule.factor", 10.0);
    cfg.train.epochs = kv.required_int("train.epochs");
    cfg.train.batch_size = kv.required_int("train.batch_size");
    cfg.train.runs = kv.get_int("train.runs", 5);
    cfg.train.seed = kv.get_u64("train.seed", 0);

    const std::string kind = kv.required("data.kind");
    if (kind == "synthetic") {
        cfg.data.kind = DataKind::Synthetic;
    } else if (kind == "dir") {
        cfg.data.kind = DataKind::Directory;
        cfg.data.path = kv.required("data.path");
        cfg.data.manifest = kv.get("data.manifest", "");
    } else {
        throw ConfigError("data.kind must be 'synthetic' or 'dir', got " + kind);
    }
    cfg.data.image_size = kv.get_int("data.image_size", 64);
    cfg.data.per_class = kv.get_int("data.per_class", 50);
    cfg.data.noise_std = kv.get_double("data.noise_std", 0.10);
    cfg.data.training_rate = kv.get_double("data.training_rate", 0.5);
    cfg.data.seed = kv.get_u64("data.seed", 1);

    kv.reject_unknown();

    cfg.model.input_size = cfg.data.image_size;
    cfg.model.validate();
    cfg.train.validate();
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

} // namespace mgml
