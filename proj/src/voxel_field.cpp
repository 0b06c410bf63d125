#include "cylrev/voxel_field.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cylrev {

VoxelField::Cell VoxelField::locate(const Vec3& p) const {
    Cell c;
    double h = spacing();
    double fx = (p.x + bound) / h, fy = (p.y + bound) / h, fz = (p.z + bound) / h;
    if (fx < 0 || fy < 0 || fz < 0 || fx > res - 1 || fy > res - 1 || fz > res - 1) return c;
    int ix = std::min(static_cast<int>(fx), res - 2);
    int iy = std::min(static_cast<int>(fy), res - 2);
    int iz = std::min(static_cast<int>(fz), res - 2);
    double tx = fx - ix, ty = fy - iy, tz = fz - iz;
    int n = 0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                c.corner[n] = voxel_index(ix + dx, iy + dy, iz + dz);
                c.w[n] = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
                ++n;
            }
    c.ok = true;
    return c;
}

double VoxelField::density_at(const Vec3& p) const {
    Cell c = locate(p);
    if (!c.ok) return 0.0;
    double v = 0;
    for (int i = 0; i < 8; ++i) v += c.w[i] * density[c.corner[i]];
    return v;
}

void VoxelField::inst_logits_at(const Cell& c, double* out) const {
    const int ch = inst_channels();
    for (int l = 0; l < ch; ++l) out[l] = 0;
    for (int i = 0; i < 8; ++i) {
        const float* base = &inst_logits[c.corner[i] * ch];
        for (int l = 0; l < ch; ++l) out[l] += c.w[i] * base[l];
    }
}

void VoxelField::cls_logits_at(const Cell& c, double* out) const {
    for (int l = 0; l < n_classes; ++l) out[l] = 0;
    for (int i = 0; i < 8; ++i) {
        const float* base = &cls_logits[c.corner[i] * n_classes];
        for (int l = 0; l < n_classes; ++l) out[l] += c.w[i] * base[l];
    }
}

namespace {

constexpr uint32_t kMagic = 0x43594c46;  // "CYLF"

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_field(const VoxelField& fld, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    write_pod(f, kMagic);
    write_pod(f, uint32_t{1});
    write_pod(f, uint8_t(fld.kind));
    write_pod(f, uint32_t(fld.res));
    write_pod(f, uint32_t(fld.n_instances));
    write_pod(f, uint32_t(fld.n_classes));
    write_pod(f, fld.alpha);
    write_pod(f, fld.beta);
    write_pod(f, fld.zeta);
    write_pod(f, float(fld.bound));
    auto write_grid = [&](const std::vector<float>& g) {
        f.write(reinterpret_cast<const char*>(g.data()),
                static_cast<std::streamsize>(g.size() * sizeof(float)));
    };
    write_grid(fld.density);
    write_grid(fld.inst_logits);
    write_grid(fld.cls_logits);
    if (!f) throw std::runtime_error("write failed for " + path);
}

VoxelField load_field(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    uint32_t magic = 0, version = 0, res = 0, k = 0, ncls = 0;
    uint8_t kind = 0;
    float bound = 0;
    VoxelField fld;
    read_pod(f, magic);
    read_pod(f, version);
    if (magic != kMagic || version != 1)
        throw std::runtime_error("bad field checkpoint header in " + path);
    read_pod(f, kind);
    read_pod(f, res);
    read_pod(f, k);
    read_pod(f, ncls);
    read_pod(f, fld.alpha);
    read_pod(f, fld.beta);
    read_pod(f, fld.zeta);
    read_pod(f, bound);
    fld.kind = CloudSource(kind);
    fld.res = static_cast<int>(res);
    fld.n_instances = static_cast<int>(k);
    fld.n_classes = static_cast<int>(ncls);
    fld.bound = bound;
    fld.allocate();
    auto read_grid = [&](std::vector<float>& g) {
        f.read(reinterpret_cast<char*>(g.data()),
               static_cast<std::streamsize>(g.size() * sizeof(float)));
    };
    read_grid(fld.density);
    read_grid(fld.inst_logits);
    read_grid(fld.cls_logits);
    if (!f) throw std::runtime_error("truncated field checkpoint " + path);
    return fld;
}

void save_field_pair(const FieldPair& pair, const std::string& dir) {
    save_field(pair.surface, dir + "/surface.field");
    save_field(pair.curve, dir + "/curve.field");
}

FieldPair load_field_pair(const std::string& dir) {
    FieldPair p;
    p.surface = load_field(dir + "/surface.field");
    p.curve = load_field(dir + "/curve.field");
    return p;
}

}  // namespace cylrev
