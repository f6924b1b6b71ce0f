#include "mgml/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mgml/nn.hpp"

namespace fs = std::filesystem;

namespace mgml {

void SceneSpec::validate() const {
    if (num_classes < 2 || num_classes > 8) {
        throw ConfigError("scene generator supports 2..8 classes, got " +
                          std::to_string(num_classes));
    }
    if (image_size < 16) {
        throw ConfigError("image_size " + std::to_string(image_size) +
                          " too small: motifs would not fit the frame");
    }
    if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
}

namespace {

enum class Motif { Square, HStripe, VStripe, Blob };

struct Region {
    int x1, y1, x2, y2;
};

// Frame regions mirror the 7-crop windows at sigma = 0.5.
Region region_box(int which, int s) {
    const int h = s / 2, q = s / 4;
    switch (which) {
        case 0: return {0, 0, h, h};          // top-left
        case 1: return {h, 0, s, h};          // top-right
        case 2: return {0, h, h, s};          // bottom-left
        case 3: return {h, h, s, s};          // bottom-right
        case 4: return {q, q, s - q, s - q};  // center
        case 5: return {0, q, s, s - q};      // middle-row band
        default: return {q, 0, s - q, s};     // middle-column band
    }
}

struct Placement {
    Motif motif;
    int region;
};

// Class identity is the arrangement; pairs (0,1), (2,3) and (6,7) share
// the same motif multiset in same-sized regions and are exact left-right
// (or diagonal) mirrors of each other, so telling them apart requires
// binding motif identity to a specific region rather than pooling global
// statistics.
const std::vector<std::vector<Placement>>& class_layouts() {
    static const std::vector<std::vector<Placement>> layouts = {
        {{Motif::Square, 0}, {Motif::Blob, 1}},     // square TL, blob TR
        {{Motif::Blob, 0}, {Motif::Square, 1}},     // mirrored pair of 0
        {{Motif::HStripe, 2}, {Motif::VStripe, 3}}, // hstripe BL, vstripe BR
        {{Motif::VStripe, 2}, {Motif::HStripe, 3}}, // mirrored pair of 2
        {{Motif::VStripe, 6}},                      // middle-column band
        {{Motif::HStripe, 5}},                      // middle-row band
        {{Motif::Square, 0}, {Motif::Square, 3}},   // diagonal TL+BR
        {{Motif::Square, 1}, {Motif::Square, 2}},   // diagonal TR+BL
    };
    return layouts;
}

// Draws one motif into its region. With an RNG the motif's position,
// size and intensity jitter per sample, so the arrangement (which region
// holds which motif) stays the only stable class cue; without an RNG the
// motif sits centered at a fixed size, making noise-free samples
// bit-identical.
void draw_motif(Tensor& img, Motif motif, const Region& r, Rng* rng) {
    const int rw = r.x2 - r.x1, rh = r.y2 - r.y1;
    const int m = std::min(rw, rh);
    const double gain = rng ? 0.60 + 0.55 * rng->next_uniform() : 1.0;
    auto place = [&](int bw, int bh, int& x1, int& y1) {
        if (rng) {
            x1 = r.x1 + rng->next_below(rw - bw + 1);
            y1 = r.y1 + rng->next_below(rh - bh + 1);
        } else {
            x1 = r.x1 + (rw - bw) / 2;
            y1 = r.y1 + (rh - bh) / 2;
        }
    };
    auto paint = [&](int x1, int y1, int x2, int y2, double c0, double c1, double c2) {
        for (int y = y1; y < y2; ++y)
            for (int x = x1; x < x2; ++x) {
                img.at(0, 0, y, x) = c0 * gain;
                img.at(0, 1, y, x) = c1 * gain;
                img.at(0, 2, y, x) = c2 * gain;
            }
    };
    switch (motif) {
        case Motif::Square: {
            int side = m / 2;
            if (rng) side = std::max(4, m / 4 + rng->next_below(m / 4 + 1));
            int x1, y1;
            place(side, side, x1, y1);
            paint(x1, y1, x1 + side, y1 + side, 0.90, 0.85, 0.30);
            break;
        }
        case Motif::HStripe: {
            int bh = std::max(1, m / 4), bw = rw * 3 / 4;
            if (rng) {
                bh = std::max(2, m / 8 + rng->next_below(m / 8 + 1));
                bw = std::max(4, rw / 2 + rng->next_below(rw / 4 + 1));
            }
            int x1, y1;
            place(bw, bh, x1, y1);
            paint(x1, y1, x1 + bw, y1 + bh, 0.30, 0.90, 0.90);
            break;
        }
        case Motif::VStripe: {
            int bw = std::max(1, m / 4), bh = rh * 3 / 4;
            if (rng) {
                bw = std::max(2, m / 8 + rng->next_below(m / 8 + 1));
                bh = std::max(4, rh / 2 + rng->next_below(rh / 4 + 1));
            }
            int x1, y1;
            place(bw, bh, x1, y1);
            paint(x1, y1, x1 + bw, y1 + bh, 0.90, 0.30, 0.90);
            break;
        }
        case Motif::Blob: {
            double radius = m / 4.0;
            double cx = (r.x1 + r.x2 - 1) / 2.0;
            double cy = (r.y1 + r.y2 - 1) / 2.0;
            if (rng) {
                radius *= 0.8 + 0.4 * rng->next_uniform();
                const double play = m / 6.0;
                cx += play * (2.0 * rng->next_uniform() - 1.0);
                cy += play * (2.0 * rng->next_uniform() - 1.0);
            }
            for (int y = r.y1; y < r.y2; ++y)
                for (int x = r.x1; x < r.x2; ++x) {
                    const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    const double a = std::exp(-d2 / (2.0 * radius * radius));
                    img.at(0, 0, y, x) += 0.45 * a * gain;
                    img.at(0, 1, y, x) += 0.80 * a * gain;
                    img.at(0, 2, y, x) += 0.55 * a * gain;
                }
            break;
        }
    }
}

} // namespace

std::vector<std::pair<int, int>> arrangement_confusable_pairs() {
    return {{0, 1}, {2, 3}, {6, 7}};
}

Dataset generate_scenes(const SceneSpec& spec, int count_per_class) {
    spec.validate();
    if (count_per_class < 1) throw ConfigError("count_per_class must be >= 1");
    const int s = spec.image_size;
    Dataset ds;
    for (int c = 0; c < spec.num_classes; ++c) {
        ds.class_names.push_back("class_" + std::to_string(c));
    }
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int i = 0; i < count_per_class; ++i) {
            Rng rng(Rng::derive(spec.seed, static_cast<std::uint64_t>(c) * 1000003 + i));
            // Jitter rides on the same per-sample stream as the noise; at
            // noise_std = 0 samples of a class are bit-identical.
            Rng* jitter = spec.noise_std > 0.0 ? &rng : nullptr;
            Tensor img({1, 3, s, s}, 0.10);
            for (const Placement& p : class_layouts()[c]) {
                draw_motif(img, p.motif, region_box(p.region, s), jitter);
            }
            for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
            if (spec.noise_std > 0.0) {
                for (double& v : img.data()) {
                    v = std::clamp(v + spec.noise_std * rng.next_normal(), 0.0, 1.0);
                }
            }
            ds.images.push_back(std::move(img));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
    if (!(spec.training_rate > 0.0 && spec.training_rate < 1.0)) {
        throw ConfigError("training_rate must lie in (0, 1)");
    }
    if (dataset.size() == 0) throw ConfigError("cannot split an empty dataset");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        by_class[dataset.labels[i]].push_back(i);
    }
    Dataset train, test;
    train.class_names = test.class_names = dataset.class_names;
    for (auto& [cls, idx] : by_class) {
        Rng rng(Rng::derive(spec.seed, 7700 + cls));
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[rng.next_below(static_cast<int>(i))]);
        }
        const int n_train =
            static_cast<int>(std::floor(spec.training_rate * idx.size()));
        if (n_train < 1 || n_train >= static_cast<int>(idx.size())) {
            throw ConfigError("training_rate " + std::to_string(spec.training_rate) +
                              " leaves an empty side for class " +
                              dataset.class_names[cls]);
        }
        for (std::size_t i = 0; i < idx.size(); ++i) {
            Dataset& side = (static_cast<int>(i) < n_train) ? train : test;
            side.images.push_back(dataset.images[idx[i]]);
            side.labels.push_back(cls);
        }
    }
    return {std::move(train), std::move(test)};
}

// ------------------------------------------------------------- PNM files

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(const std::string& buf, std::size_t& pos, const std::string& path) {
    while (pos < buf.size()) {
        if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
            ++pos;
        } else if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    std::size_t start = pos;
    while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (start == pos) throw IoError("truncated PNM header in " + path);
    return buf.substr(start, pos - start);
}

int parse_dim(const std::string& tok, const std::string& path) {
    try {
        const int v = std::stoi(tok);
        if (v < 1) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw IoError("malformed PNM header value '" + tok + "' in " + path);
    }
}

} // namespace

Tensor load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file " + path);
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    const std::string magic = next_token(buf, pos, path);
    if (magic != "P5" && magic != "P6") {
        throw IoError("unsupported PNM magic '" + magic + "' in " + path +
                      " (binary P5/P6 only)");
    }
    const int w = parse_dim(next_token(buf, pos, path), path);
    const int h = parse_dim(next_token(buf, pos, path), path);
    const int maxval = parse_dim(next_token(buf, pos, path), path);
    if (maxval != 255) {
        throw IoError("unsupported maxval " + std::to_string(maxval) + " in " + path);
    }
    ++pos;  // single whitespace byte after maxval
    const int channels = (magic == "P6") ? 3 : 1;
    const std::size_t need = static_cast<std::size_t>(w) * h * channels;
    if (pos + need > buf.size()) throw IoError("truncated pixel payload in " + path);

    Tensor img({1, 3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (channels == 3) {
                for (int c = 0; c < 3; ++c) {
                    const unsigned char b =
                        static_cast<unsigned char>(buf[pos + (static_cast<std::size_t>(y) * w + x) * 3 + c]);
                    img.at(0, c, y, x) = b / 255.0;
                }
            } else {
                const unsigned char b =
                    static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(y) * w + x]);
                for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = b / 255.0;
            }
        }
    return img;
}

void write_ppm(const Tensor& image, const std::string& path) {
    const Shape s = image.shape();
    if (s.n != 1 || s.c != 3) {
        throw ShapeError("write_ppm expects a (1, 3, h, w) image, got " + s.str());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image file " + path);
    out << "P6\n" << s.w << " " << s.h << "\n255\n";
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(image.at(0, c, y, x), 0.0, 1.0);
                out.put(static_cast<char>(std::lround(v * 255.0)));
            }
    if (!out) throw IoError("failed writing image file " + path);
}

// ------------------------------------------------------ directory loader

namespace {

Dataset load_entries(const std::string& root,
                     std::map<std::string, std::vector<std::string>> by_class) {
    if (by_class.empty()) throw ConfigError("no class directories under " + root);
    Dataset ds;
    for (auto& [name, files] : by_class) {
        if (files.empty()) throw ConfigError("empty class directory '" + name + "'");
        ds.class_names.push_back(name);
    }
    int label = 0;
    for (auto& [name, files] : by_class) {
        std::sort(files.begin(), files.end());
        for (const std::string& f : files) {
            ds.images.push_back(load_pnm(f));
            ds.labels.push_back(label);
        }
        ++label;
    }
    return ds;
}

} // namespace

Dataset load_image_dir(const std::string& root) {
    if (!fs::is_directory(root)) throw ConfigError("dataset root is not a directory: " + root);
    std::map<std::string, std::vector<std::string>> by_class;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        auto& files = by_class[entry.path().filename().string()];
        for (const auto& f : fs::directory_iterator(entry.path())) {
            const std::string ext = f.path().extension().string();
            if (ext == ".ppm" || ext == ".pgm") files.push_back(f.path().string());
        }
    }
    return load_entries(root, std::move(by_class));
}

Dataset load_image_dir(const std::string& root, const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest " + manifest_path);
    std::map<std::string, std::vector<std::string>> by_class;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw IoError("manifest line " + std::to_string(lineno) +
                          " missing tab separator in " + manifest_path);
        }
        by_class[line.substr(tab + 1)].push_back(
            (fs::path(root) / line.substr(0, tab)).string());
    }
    return load_entries(root, std::move(by_class));
}

} // namespace mgml
