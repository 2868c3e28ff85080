#pragma once

#include <vector>

#include "earthsight/types.hpp"

namespace earthsight {

struct GeoPoint {
    double lat = 0; // degrees, [-90, 90]
    double lon = 0; // degrees, [-180, 180]
};

/// Closed axis-aligned lat/lon box. Construct through Aoi::add_box, which
/// splits boxes that wrap the antimeridian.
struct GeoBox {
    double lat_min = 0, lat_max = 0;
    double lon_min = 0, lon_max = 0;

    bool contains(const GeoPoint& p) const {
        return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
    }
};

/// Convex lat/lon polygon with closed boundary, treated as planar at the
/// scales this simulator cares about.
class ConvexPolygon {
public:
    explicit ConvexPolygon(std::vector<GeoPoint> vertices);
    bool contains(const GeoPoint& p) const;
    const std::vector<GeoPoint>& vertices() const { return vertices_; }

private:
    std::vector<GeoPoint> vertices_; // counter-clockwise
};

/// Area of interest: a union of boxes and convex polygons. Malformed regions
/// are rejected here, at registration time, never during matching.
class Aoi {
public:
    /// Splits at +-180 when lon_min > lon_max.
    void add_box(double lat_min, double lat_max, double lon_min, double lon_max);
    void add_polygon(std::vector<GeoPoint> vertices);

    bool contains(const GeoPoint& p) const;
    bool empty() const { return boxes_.empty() && polygons_.empty(); }

    const std::vector<GeoBox>& boxes() const { return boxes_; }
    const std::vector<ConvexPolygon>& polygons() const { return polygons_; }

    /// Conservative bounding boxes, one per component (used by the spatial
    /// index only; matching itself is exact).
    std::vector<GeoBox> bounding_boxes() const;

private:
    std::vector<GeoBox> boxes_;
    std::vector<ConvexPolygon> polygons_;
};

} // namespace earthsight
