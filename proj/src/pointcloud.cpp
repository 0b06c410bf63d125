#include "cylrev/pointcloud.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cylrev {

void save_ply(const LabeledPointCloud& cloud, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "ply\nformat ascii 1.0\n";
    f << "comment source " << (cloud.source == CloudSource::Surface ? "surface" : "curve") << "\n";
    f << "element vertex " << cloud.size() << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    f << "property uchar instance\nproperty uchar cls\n";
    f << "end_header\n";
    char buf[128];
    for (size_t i = 0; i < cloud.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %d %d\n", cloud.points[i].x,
                      cloud.points[i].y, cloud.points[i].z, int(cloud.instance[i]),
                      int(cloud.cls[i]));
        f << buf;
    }
}

LabeledPointCloud load_ply(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::string line;
    size_t n = 0;
    LabeledPointCloud cloud;
    bool header_done = false;
    while (std::getline(f, line)) {
        if (line.rfind("comment source", 0) == 0) {
            cloud.source = line.find("curve") != std::string::npos ? CloudSource::Curve
                                                                   : CloudSource::Surface;
        } else if (line.rfind("element vertex", 0) == 0) {
            n = std::stoull(line.substr(15));
        } else if (line == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw std::runtime_error("malformed PLY header in " + path);
    for (size_t i = 0; i < n; ++i) {
        double x, y, z;
        int inst, cls;
        if (!(f >> x >> y >> z >> inst >> cls))
            throw std::runtime_error("truncated PLY body in " + path);
        cloud.push({x, y, z}, static_cast<uint8_t>(inst), static_cast<uint8_t>(cls));
    }
    return cloud;
}

}  // namespace cylrev
