#include "earthsight/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace earthsight {

namespace {

double cross(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) {
    return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

void check_point(const GeoPoint& p) {
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon))
        throw std::invalid_argument("geometry: non-finite coordinate");
    if (p.lat < -90.0 || p.lat > 90.0)
        throw std::invalid_argument("geometry: latitude out of [-90, 90]");
    if (p.lon < -180.0 || p.lon > 180.0)
        throw std::invalid_argument("geometry: longitude out of [-180, 180]");
}

} // namespace

ConvexPolygon::ConvexPolygon(std::vector<GeoPoint> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3)
        throw std::invalid_argument("ConvexPolygon: fewer than 3 vertices");
    for (const GeoPoint& p : vertices_) check_point(p);

    // Normalize to counter-clockwise and require convexity.
    double area2 = 0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const GeoPoint& a = vertices_[i];
        const GeoPoint& b = vertices_[(i + 1) % vertices_.size()];
        area2 += a.lon * b.lat - b.lon * a.lat;
    }
    if (area2 == 0) throw std::invalid_argument("ConvexPolygon: degenerate polygon");
    if (area2 < 0) std::reverse(vertices_.begin(), vertices_.end());
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const GeoPoint& o = vertices_[i];
        const GeoPoint& a = vertices_[(i + 1) % vertices_.size()];
        const GeoPoint& b = vertices_[(i + 2) % vertices_.size()];
        if (cross(o, a, b) < 0)
            throw std::invalid_argument("ConvexPolygon: vertices are not convex");
    }
}

bool ConvexPolygon::contains(const GeoPoint& p) const {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const GeoPoint& a = vertices_[i];
        const GeoPoint& b = vertices_[(i + 1) % vertices_.size()];
        if (cross(a, b, p) < 0) return false; // strictly outside; boundary counts
    }
    return true;
}

void Aoi::add_box(double lat_min, double lat_max, double lon_min, double lon_max) {
    if (!(lat_min <= lat_max))
        throw std::invalid_argument("Aoi: lat_min above lat_max");
    check_point(GeoPoint{lat_min, std::clamp(lon_min, -180.0, 180.0)});
    check_point(GeoPoint{lat_max, std::clamp(lon_max, -180.0, 180.0)});
    if (lon_min <= lon_max) {
        boxes_.push_back(GeoBox{lat_min, lat_max, lon_min, lon_max});
    } else {
        // Crosses the antimeridian.
        boxes_.push_back(GeoBox{lat_min, lat_max, lon_min, 180.0});
        boxes_.push_back(GeoBox{lat_min, lat_max, -180.0, lon_max});
    }
}

void Aoi::add_polygon(std::vector<GeoPoint> vertices) {
    polygons_.emplace_back(std::move(vertices));
}

bool Aoi::contains(const GeoPoint& p) const {
    for (const GeoBox& b : boxes_)
        if (b.contains(p)) return true;
    for (const ConvexPolygon& poly : polygons_)
        if (poly.contains(p)) return true;
    return false;
}

std::vector<GeoBox> Aoi::bounding_boxes() const {
    std::vector<GeoBox> out = boxes_;
    for (const ConvexPolygon& poly : polygons_) {
        GeoBox b{90, -90, 180, -180};
        for (const GeoPoint& v : poly.vertices()) {
            b.lat_min = std::min(b.lat_min, v.lat);
            b.lat_max = std::max(b.lat_max, v.lat);
            b.lon_min = std::min(b.lon_min, v.lon);
            b.lon_max = std::max(b.lon_max, v.lon);
        }
        out.push_back(b);
    }
    return out;
}

} // namespace earthsight
