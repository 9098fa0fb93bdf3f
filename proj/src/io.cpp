#include "spx/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace spx {

namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64(const std::string& s, size_t off) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(s[off + i])) << (8 * i);
    return v;
}

uint32_t get_u32(const std::string& s, size_t off) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(s[off + i])) << (8 * i);
    return v;
}

constexpr uint8_t kDtypeF32 = 1;
constexpr uint8_t kDtypeU32 = 2;

struct SptHeader {
    uint8_t dtype = 0;
    std::vector<uint64_t> dims;
    size_t payload_off = 0;
};

SptHeader parse_spt(const std::string& bytes, const std::string& what) {
    if (bytes.size() < 8 || bytes.compare(0, 4, "SPT1") != 0)
        throw std::runtime_error(what + ": bad magic");
    SptHeader h;
    h.dtype = static_cast<uint8_t>(bytes[4]);
    if (h.dtype != kDtypeF32 && h.dtype != kDtypeU32)
        throw std::runtime_error(what + ": unknown dtype " + std::to_string(h.dtype));
    uint8_t rank = static_cast<uint8_t>(bytes[5]);
    size_t need = 8 + static_cast<size_t>(rank) * 8;
    if (bytes.size() < need) throw std::runtime_error(what + ": truncated payload");
    uint64_t count = 1;
    for (int d = 0; d < rank; ++d) {
        h.dims.push_back(get_u64(bytes, 8 + static_cast<size_t>(d) * 8));
        count *= h.dims.back();
    }
    h.payload_off = need;
    if (bytes.size() != need + count * 4)
        throw std::runtime_error(what + ": truncated payload");
    return h;
}

std::string spt_header(uint8_t dtype, const std::vector<uint64_t>& dims) {
    std::string out = "SPT1";
    out.push_back(static_cast<char>(dtype));
    out.push_back(static_cast<char>(dims.size()));
    out.push_back('\0');
    out.push_back('\0');
    for (uint64_t d : dims) put_u64(out, d);
    return out;
}

}  // namespace

Tensor read_tensor(const std::string& path) {
    const std::string bytes = read_file(path);
    SptHeader h = parse_spt(bytes, "read_tensor");
    if (h.dtype != kDtypeF32) throw std::runtime_error("read_tensor: expected float32 dtype");
    if (h.dims.size() != 3) throw std::runtime_error("read_tensor: expected rank 3");
    Tensor t(static_cast<int>(h.dims[0]), static_cast<int>(h.dims[1]), static_cast<int>(h.dims[2]));
    for (size_t i = 0; i < t.size(); ++i)
        t.data()[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, h.payload_off + 4 * i)));
    if (!t.all_finite()) throw std::runtime_error("read_tensor: non-finite values in " + path);
    return t;
}

void write_tensor(const std::string& path, const Tensor& t) {
    if (!t.all_finite()) throw std::invalid_argument("write_tensor: non-finite values");
    std::string out = spt_header(kDtypeF32, {static_cast<uint64_t>(t.channels()),
                                             static_cast<uint64_t>(t.rows()),
                                             static_cast<uint64_t>(t.cols())});
    out.reserve(out.size() + t.size() * 4);
    for (double v : t.data()) put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
    write_file(path, out);
}

SuperpixelMap read_id_map(const std::string& path) {
    const std::string bytes = read_file(path);
    SptHeader h = parse_spt(bytes, "read_id_map");
    if (h.dtype != kDtypeU32) throw std::runtime_error("read_id_map: expected uint32 dtype");
    if (h.dims.size() != 2) throw std::runtime_error("read_id_map: expected rank 2");
    SuperpixelMap sp(static_cast<int>(h.dims[0]), static_cast<int>(h.dims[1]), 0);
    int32_t max_id = -1;
    for (size_t i = 0; i < sp.ids.size(); ++i) {
        sp.ids[i] = static_cast<int32_t>(get_u32(bytes, h.payload_off + 4 * i));
        max_id = std::max(max_id, sp.ids[i]);
    }
    sp.count = max_id + 1;
    return sp;
}

void write_id_map(const std::string& path, const SuperpixelMap& sp) {
    std::string out = spt_header(kDtypeU32, {static_cast<uint64_t>(sp.rows),
                                             static_cast<uint64_t>(sp.cols)});
    out.reserve(out.size() + sp.ids.size() * 4);
    for (int32_t v : sp.ids) {
        if (v < 0) throw std::invalid_argument("write_id_map: negative id");
        put_u32(out, static_cast<uint32_t>(v));
    }
    write_file(path, out);
}

// ---- PNM ------------------------------------------------------------------

namespace {

// Reads one whitespace/comment-delimited PNM header token.
std::string pnm_token(const std::string& s, size_t& pos) {
    while (pos < s.size()) {
        if (s[pos] == '#') {
            while (pos < s.size() && s[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        } else {
            break;
        }
    }
    size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) throw std::runtime_error("PNM: truncated header");
    return s.substr(start, pos - start);
}

struct PnmHeader {
    std::string magic;
    int cols = 0, rows = 0, maxval = 0;
    size_t data_off = 0;
};

PnmHeader parse_pnm(const std::string& bytes) {
    size_t pos = 0;
    PnmHeader h;
    h.magic = pnm_token(bytes, pos);
    h.cols = std::stoi(pnm_token(bytes, pos));
    h.rows = std::stoi(pnm_token(bytes, pos));
    h.maxval = std::stoi(pnm_token(bytes, pos));
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw std::runtime_error("PNM: malformed header");
    h.data_off = pos + 1;
    if (h.cols <= 0 || h.rows <= 0 || h.maxval <= 0) throw std::runtime_error("PNM: bad dimensions");
    return h;
}

}  // namespace

Image read_ppm(const std::string& path) {
    const std::string bytes = read_file(path);
    PnmHeader h = parse_pnm(bytes);
    if (h.magic != "P6") throw std::runtime_error("read_ppm: expected P6, got " + h.magic);
    if (h.maxval != 255) throw std::runtime_error("read_ppm: only maxval 255 supported");
    size_t need = static_cast<size_t>(h.rows) * h.cols * 3;
    if (bytes.size() - h.data_off < need) throw std::runtime_error("read_ppm: truncated payload");
    Image img(h.rows, h.cols);
    std::memcpy(img.rgb.data(), bytes.data() + h.data_off, need);
    return img;
}

void write_ppm(const std::string& path, const Image& img) {
    std::string out = "P6\n" + std::to_string(img.cols) + " " + std::to_string(img.rows) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
    write_file(path, out);
}

LabelMap read_pgm(const std::string& path) {
    const std::string bytes = read_file(path);
    PnmHeader h = parse_pnm(bytes);
    if (h.magic != "P5") throw std::runtime_error("read_pgm: expected P5, got " + h.magic);
    LabelMap map(h.rows, h.cols);
    size_t n = map.labels.size();
    if (h.maxval < 256) {
        if (bytes.size() - h.data_off < n) throw std::runtime_error("read_pgm: truncated payload");
        for (size_t i = 0; i < n; ++i)
            map.labels[i] = static_cast<uint8_t>(bytes[h.data_off + i]);
    } else {
        if (bytes.size() - h.data_off < 2 * n) throw std::runtime_error("read_pgm: truncated payload");
        for (size_t i = 0; i < n; ++i) {
            // 16-bit PGM samples are big-endian
            uint8_t hi = static_cast<uint8_t>(bytes[h.data_off + 2 * i]);
            uint8_t lo = static_cast<uint8_t>(bytes[h.data_off + 2 * i + 1]);
            map.labels[i] = (static_cast<int32_t>(hi) << 8) | lo;
        }
    }
    return map;
}

void write_pgm(const std::string& path, const LabelMap& map) {
    int32_t max_label = 0;
    for (int32_t v : map.labels) {
        if (v < 0) throw std::invalid_argument("write_pgm: negative label");
        max_label = std::max(max_label, v);
    }
    const bool wide = max_label > 255;
    std::string out = "P5\n" + std::to_string(map.cols) + " " + std::to_string(map.rows) + "\n" +
                      (wide ? "65535" : "255") + "\n";
    for (int32_t v : map.labels) {
        if (wide) out.push_back(static_cast<char>((v >> 8) & 0xff));
        out.push_back(static_cast<char>(v & 0xff));
    }
    write_file(path, out);
}

// ---- JSON documents -------------------------------------------------------

namespace {

json parse_json(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("malformed JSON: " + path);
    return j;
}

}  // namespace

EdgeList read_edges(const std::string& path) {
    json j = parse_json(path);
    EdgeList el;
    std::string kind = j.at("weight_kind").get<std::string>();
    if (kind == "similarity")
        el.kind = WeightKind::Similarity;
    else if (kind == "dissimilarity")
        el.kind = WeightKind::Dissimilarity;
    else
        throw std::runtime_error("read_edges: unknown weight_kind " + kind);
    for (const auto& e : j.at("edges"))
        el.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    return el;
}

void write_edges(const std::string& path, const EdgeList& el) {
    json j;
    j["weight_kind"] = el.kind == WeightKind::Similarity ? "similarity" : "dissimilarity";
    j["edges"] = json::array();
    for (const Edge& e : el.edges) j["edges"].push_back({e.i, e.j, e.weight});
    write_file(path, j.dump(2) + "\n");
}

SuperpixelFeatures read_features(const std::string& path) {
    json j = parse_json(path);
    SuperpixelFeatures spf;
    spf.count = j.at("count").get<int>();
    spf.dim = j.at("dim").get<int>();
    spf.rows = j.at("rows").get<int>();
    spf.cols = j.at("cols").get<int>();
    spf.features = Matrix(spf.count, spf.dim);
    const auto& feats = j.at("features");
    if (static_cast<int>(feats.size()) != spf.count)
        throw std::runtime_error("read_features: feature row count mismatch");
    for (int i = 0; i < spf.count; ++i) {
        const auto& row = feats[i];
        if (static_cast<int>(row.size()) != spf.dim)
            throw std::runtime_error("read_features: feature dim mismatch");
        for (int d = 0; d < spf.dim; ++d) spf.features.at(i, d) = row[d].get<double>();
    }
    for (const auto& p : j.at("positions"))
        spf.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& s : j.at("sizes")) spf.sizes.push_back(s.get<int>());
    if (static_cast<int>(spf.positions.size()) != spf.count ||
        static_cast<int>(spf.sizes.size()) != spf.count)
        throw std::runtime_error("read_features: positions/sizes count mismatch");
    return spf;
}

void write_features(const std::string& path, const SuperpixelFeatures& spf) {
    json j;
    j["count"] = spf.count;
    j["dim"] = spf.dim;
    j["rows"] = spf.rows;
    j["cols"] = spf.cols;
    j["features"] = json::array();
    for (int i = 0; i < spf.count; ++i) {
        json row = json::array();
        for (int d = 0; d < spf.dim; ++d) row.push_back(spf.features.at(i, d));
        j["features"].push_back(std::move(row));
    }
    j["positions"] = json::array();
    for (const auto& p : spf.positions) j["positions"].push_back({p[0], p[1]});
    j["sizes"] = spf.sizes;
    write_file(path, j.dump(2) + "\n");
}

InstanceSet read_instances(const std::string& path) {
    json j = parse_json(path);
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    InstanceSet set;
    for (const auto& inst : j.at("instances")) {
        Instance out;
        out.class_id = inst.at("class_id").get<int>();
        out.score = inst.at("score").get<double>();
        out.mask = LabelMap(rows, cols);
        // row-major RLE, alternating zero/one runs, leading run is zeros
        size_t pos = 0;
        int value = 0;
        for (const auto& run : inst.at("counts")) {
            int n = run.get<int>();
            if (n < 0 || pos + n > out.mask.labels.size())
                throw std::runtime_error("read_instances: RLE overruns mask");
            for (int k = 0; k < n; ++k) out.mask.labels[pos++] = value;
            value = 1 - value;
        }
        if (pos != out.mask.labels.size())
            throw std::runtime_error("read_instances: RLE does not cover mask");
        if (std::all_of(out.mask.labels.begin(), out.mask.labels.end(),
                        [](int32_t v) { return v == 0; }))
            throw std::runtime_error("read_instances: empty mask");
        set.push_back(std::move(out));
    }
    return set;
}

void write_instances(const std::string& path, const InstanceSet& set) {
    json j;
    if (!set.empty()) {
        j["rows"] = set.front().mask.rows;
        j["cols"] = set.front().mask.cols;
    } else {
        j["rows"] = 0;
        j["cols"] = 0;
    }
    j["instances"] = json::array();
    for (const Instance& inst : set) {
        json ji;
        ji["class_id"] = inst.class_id;
        ji["score"] = inst.score;
        json counts = json::array();
        int value = 0, run = 0;
        for (int32_t v : inst.mask.labels) {
            if (v == value) {
                ++run;
            } else {
                counts.push_back(run);
                value = 1 - value;
                run = 1;
            }
        }
        counts.push_back(run);
        ji["counts"] = std::move(counts);
        j["instances"].push_back(std::move(ji));
    }
    write_file(path, j.dump(2) + "\n");
}

std::vector<std::array<uint8_t, 3>> read_palette(const std::string& path) {
    json j = parse_json(path);
    std::vector<std::array<uint8_t, 3>> palette;
    for (const auto& c : j) {
        int r = c.at(0).get<int>(), g = c.at(1).get<int>(), b = c.at(2).get<int>();
        if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
            throw std::runtime_error("read_palette: channel out of [0,255]");
        palette.push_back({static_cast<uint8_t>(r), static_cast<uint8_t>(g), static_cast<uint8_t>(b)});
    }
    return palette;
}

void write_palette(const std::string& path, const std::vector<std::array<uint8_t, 3>>& palette) {
    json j = json::array();
    for (const auto& c : palette) j.push_back({c[0], c[1], c[2]});
    write_file(path, j.dump(2) + "\n");
}

void write_metrics(const std::string& path, const MetricReport& report,
                   const std::map<std::string, std::vector<double>>& extra_series,
                   const std::map<std::string, double>& extra_scalars) {
    json j;
    json per_class = json::array();
    for (double v : report.per_class_iou) {
        if (v < 0)
            per_class.push_back(nullptr);  // class absent from both maps
        else
            per_class.push_back(v);
    }
    j["per_class_iou"] = std::move(per_class);
    j["mean_iou"] = report.mean_iou;
    j["pixel_accuracy"] = report.pixel_accuracy;
    json ap = json::object();
    for (const auto& [thr, v] : report.ap_r) {
        char key[16];
        std::snprintf(key, sizeof key, "%.2f", thr);
        ap[key] = v;
    }
    j["ap_r"] = std::move(ap);
    for (const auto& [name, series] : extra_series) j[name] = series;
    for (const auto& [name, value] : extra_scalars) j[name] = value;
    write_file(path, j.dump(2) + "\n");
}

}  // namespace spx
