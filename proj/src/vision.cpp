#include "acoustrap/vision.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "acoustrap/fixture.hpp"

namespace acoustrap {

namespace {

CameraModel camera_from_rows(std::string name, int row0, Pixel ref, double scale) {
    if (!(scale > 0.0)) throw ConfigError("camera scale must be > 0");
    CameraModel cam;
    cam.name = std::move(name);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) cam.jacobian[r][c] = fixture::kJacobian[row0 + r][c] * scale;
    cam.ref_pixel = {ref.u * scale, ref.v * scale};
    cam.ref_world = fixture::kReferenceWorld;
    cam.width = static_cast<int>(fixture::kFullWidth * scale); // truncates: 2050 / 4 -> 512
    cam.height = static_cast<int>(fixture::kFullHeight * scale);
    return cam;
}

double background_level(const CameraModel& cam, double u, double v) {
    return std::visit([&](const auto& bg) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(bg)>, FlatBackground>) {
            return bg.level;
        } else {
            return bg.level + bg.du * (u - cam.width / 2.0) + bg.dv * (v - cam.height / 2.0);
        }
    }, cam.background);
}

std::uint8_t to_gray(double value) {
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(value), 0L, 255L));
}

Eigen::Matrix2d image_metric(const CameraModel& cam) {
    Eigen::Matrix<double, 2, 3> a;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) a(r, c) = cam.jacobian[r][c];
    return a * a.transpose(); // pixel^2 per um^2
}

// Border tracing directions, clockwise with v pointing down.
constexpr int kDu[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDv[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_of(int du, int dv) {
    for (int d = 0; d < 8; ++d)
        if (kDu[d] == du && kDv[d] == dv) return d;
    return -1;
}

} // namespace

CameraModel make_camera_h(double scale) { return camera_from_rows("H", 0, fixture::kReferencePixelH, scale); }
CameraModel make_camera_v(double scale) { return camera_from_rows("V", 2, fixture::kReferencePixelV, scale); }

Pixel project(const CameraModel& cam, const Vec3& world) {
    const Vec3 d = (world - cam.ref_world) * 1e3; // mm -> um
    const auto& j = cam.jacobian;
    return {j[0][0] * d.x + j[0][1] * d.y + j[0][2] * d.z + cam.ref_pixel.u,
            j[1][0] * d.x + j[1][1] * d.y + j[1][2] * d.z + cam.ref_pixel.v};
}

double pixel_scale(const CameraModel& cam) {
    double sum = 0.0;
    for (const auto& row : cam.jacobian)
        sum += std::max({std::abs(row[0]), std::abs(row[1]), std::abs(row[2])});
    return sum / 2.0;
}

double pixel_scale(const std::array<std::array<double, 3>, 4>& jacobian) {
    double sum = 0.0;
    for (const auto& row : jacobian) sum += std::max({std::abs(row[0]), std::abs(row[1]), std::abs(row[2])});
    return sum / 4.0;
}

std::array<double, 2> sphere_image_axes(const CameraModel& cam, double diameter_um) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(image_metric(cam));
    const double r = diameter_um / 2.0;
    return {r * std::sqrt(es.eigenvalues()(1)), r * std::sqrt(es.eigenvalues()(0))};
}

double expected_diameter_px(const CameraModel& cam, double diameter_um) {
    const auto axes = sphere_image_axes(cam, diameter_um);
    return axes[0] + axes[1];
}

bool in_image(const CameraModel& cam, const Pixel& p) {
    return p.u >= -0.5 && p.v >= -0.5 && p.u <= cam.width - 0.5 && p.v <= cam.height - 0.5;
}

ImageFrame render_background(const CameraModel& cam) {
    ImageFrame frame{cam.width, cam.height, std::vector<std::uint8_t>(std::size_t(cam.width) * cam.height), 0.0, false};
    for (int v = 0; v < cam.height; ++v)
        for (int u = 0; u < cam.width; ++u)
            frame.pixels[std::size_t(v) * cam.width + u] = to_gray(background_level(cam, u, v));
    return frame;
}

ImageFrame render_frame(const CameraModel& cam, const ParticleState& particle, double t, std::uint64_t seed) {
    const int w = cam.width;
    const int h = cam.height;
    std::vector<double> level(std::size_t(w) * h);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) level[std::size_t(v) * w + u] = background_level(cam, u, v);

    const Pixel c = project(cam, particle.position);
    const auto axes = sphere_image_axes(cam, particle.diameter_um);
    const double r_um = particle.diameter_um / 2.0;
    const Eigen::Matrix2d g = image_metric(cam).inverse() / (r_um * r_um);
    auto inside = [&](double du, double dv) {
        return g(0, 0) * du * du + 2.0 * g(0, 1) * du * dv + g(1, 1) * dv * dv <= 1.0;
    };

    const double reach = axes[0] + 1.0;
    const int u_lo = static_cast<int>(std::floor(c.u - reach));
    const int u_hi = static_cast<int>(std::ceil(c.u + reach));
    const int v_lo = static_cast<int>(std::floor(c.v - reach));
    const int v_hi = static_cast<int>(std::ceil(c.v + reach));
    bool partial = u_lo < 0 || v_lo < 0 || u_hi >= w || v_hi >= h;

    constexpr int kSub = 8;
    const double band = 1.0 / std::max(axes[1], 1e-9);
    for (int v = std::max(v_lo, 0); v <= std::min(v_hi, h - 1); ++v) {
        for (int u = std::max(u_lo, 0); u <= std::min(u_hi, w - 1); ++u) {
            const double du = u - c.u;
            const double dv = v - c.v;
            const double q = std::sqrt(g(0, 0) * du * du + 2.0 * g(0, 1) * du * dv + g(1, 1) * dv * dv);
            double coverage;
            if (q <= 1.0 - band) {
                coverage = 1.0;
            } else if (q >= 1.0 + band) {
                coverage = 0.0;
            } else {
                int hits = 0;
                for (int sv = 0; sv < kSub; ++sv)
                    for (int su = 0; su < kSub; ++su)
                        hits += inside(du + (su + 0.5) / kSub - 0.5, dv + (sv + 0.5) / kSub - 0.5);
                coverage = hits / double(kSub * kSub);
            }
            double& l = level[std::size_t(v) * w + u];
            l = l * (1.0 - coverage) + cam.particle_level * coverage;
        }
    }
    if (u_hi < 0 || v_hi < 0 || u_lo >= w || v_lo >= h) partial = true;

    ImageFrame frame{w, h, std::vector<std::uint8_t>(level.size()), t, partial};
    if (cam.noise_sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, cam.noise_sigma);
        for (std::size_t i = 0; i < level.size(); ++i) frame.pixels[i] = to_gray(level[i] + noise(rng));
    } else {
        for (std::size_t i = 0; i < level.size(); ++i) frame.pixels[i] = to_gray(level[i]);
    }
    return frame;
}

namespace pipeline {

std::vector<int> subtract_background(const ImageFrame& frame, const ImageFrame& background) {
    if (frame.width != background.width || frame.height != background.height) {
        throw ConfigError("frame and background sizes differ");
    }
    std::vector<int> diff(frame.pixels.size());
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = std::abs(int(frame.pixels[i]) - int(background.pixels[i]));
    return diff;
}

Binary adaptive_binarize(const std::vector<int>& diff, int width, int height, int window, double offset) {
    // Summed-area table with a zero first row/column.
    const int sw = width + 1;
    std::vector<std::int64_t> sat(std::size_t(sw) * (height + 1), 0);
    for (int v = 0; v < height; ++v) {
        std::int64_t row = 0;
        for (int u = 0; u < width; ++u) {
            row += diff[std::size_t(v) * width + u];
            sat[std::size_t(v + 1) * sw + u + 1] = sat[std::size_t(v) * sw + u + 1] + row;
        }
    }
    const int half = window / 2;
    Binary out{width, height, std::vector<std::uint8_t>(diff.size(), 0)};
    for (int v = 0; v < height; ++v) {
        const int v0 = std::max(0, v - half);
        const int v1 = std::min(height, v + half + 1);
        for (int u = 0; u < width; ++u) {
            const int u0 = std::max(0, u - half);
            const int u1 = std::min(width, u + half + 1);
            const std::int64_t sum = sat[std::size_t(v1) * sw + u1] - sat[std::size_t(v0) * sw + u1] -
                                     sat[std::size_t(v1) * sw + u0] + sat[std::size_t(v0) * sw + u0];
            const double mean = double(sum) / double((u1 - u0) * (v1 - v0));
            out.on[std::size_t(v) * width + u] = diff[std::size_t(v) * width + u] > mean + offset;
        }
    }
    return out;
}

Window best_window(const Binary& fg, int size, int stride) {
    const int w = fg.width;
    const int h = fg.height;
    size = std::clamp(size, 1, std::min(w, h));
    stride = std::max(1, stride);
    const int sw = w + 1;
    std::vector<std::int32_t> sat(std::size_t(sw) * (h + 1), 0);
    for (int v = 0; v < h; ++v) {
        std::int32_t row = 0;
        for (int u = 0; u < w; ++u) {
            row += fg.on[std::size_t(v) * w + u];
            sat[std::size_t(v + 1) * sw + u + 1] = sat[std::size_t(v) * sw + u + 1] + row;
        }
    }
    auto starts = [stride, size](int extent) {
        std::vector<int> s;
        for (int p = 0; p + size <= extent; p += stride) s.push_back(p);
        if (s.empty() || s.back() != extent - size) s.push_back(extent - size);
        return s;
    };
    Window best{0, 0, size, 0};
    for (int v0 : starts(h)) {
        for (int u0 : starts(w)) {
            const int u1 = u0 + size;
            const int v1 = v0 + size;
            const auto count = std::size_t(sat[std::size_t(v1) * sw + u1] - sat[std::size_t(v0) * sw + u1] -
                                           sat[std::size_t(v1) * sw + u0] + sat[std::size_t(v0) * sw + u0]);
            if (count > best.count) best = {u0, v0, size, count};
        }
    }
    return best;
}

Binary close3x3(const Binary& fg, int u0, int v0, int u1, int v1) {
    const int w = fg.width;
    const int h = fg.height;
    u0 = std::max(u0, 0);
    v0 = std::max(v0, 0);
    u1 = std::min(u1, w);
    v1 = std::min(v1, h);
    auto in_roi = [&](int u, int v) { return u >= u0 && u < u1 && v >= v0 && v < v1; };

    Binary dilated{w, h, std::vector<std::uint8_t>(fg.on.size(), 0)};
    for (int v = v0; v < v1; ++v)
        for (int u = u0; u < u1; ++u) {
            bool any = false;
            for (int dv = -1; dv <= 1 && !any; ++dv)
                for (int du = -1; du <= 1 && !any; ++du)
                    any = in_roi(u + du, v + dv) && fg.at(u + du, v + dv);
            dilated.on[std::size_t(v) * w + u] = any;
        }
    Binary closed{w, h, std::vector<std::uint8_t>(fg.on.size(), 0)};
    for (int v = v0; v < v1; ++v)
        for (int u = u0; u < u1; ++u) {
            bool all = true;
            for (int dv = -1; dv <= 1 && all; ++dv)
                for (int du = -1; du <= 1 && all; ++du) {
                    // Outside the ROI counts as set so the ROI edge does not erode.
                    all = !in_roi(u + du, v + dv) || dilated.at(u + du, v + dv);
                }
            closed.on[std::size_t(v) * w + u] = all;
        }
    return closed;
}

std::vector<Pixel> largest_blob_border(const Binary& fg) {
    const int w = fg.width;
    const int h = fg.height;
    std::vector<int> label(fg.on.size(), 0);
    int best_label = 0;
    std::size_t best_area = 0;
    std::size_t best_start = 0;
    int next_label = 0;
    std::vector<std::size_t> stack;
    for (std::size_t idx = 0; idx < fg.on.size(); ++idx) {
        if (!fg.on[idx] || label[idx] != 0) continue;
        ++next_label;
        std::size_t area = 0;
        stack.push_back(idx);
        label[idx] = next_label;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            ++area;
            const int u = int(cur % std::size_t(w));
            const int v = int(cur / std::size_t(w));
            for (int d = 0; d < 8; ++d) {
                const int nu = u + kDu[d];
                const int nv = v + kDv[d];
                if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
                const std::size_t n = std::size_t(nv) * w + nu;
                if (fg.on[n] && label[n] == 0) {
                    label[n] = next_label;
                    stack.push_back(n);
                }
            }
        }
        if (area > best_area) {
            best_area = area;
            best_label = next_label;
            best_start = idx; // raster-first pixel of the blob
        }
    }
    if (best_area == 0) return {};

    auto on = [&](int u, int v) {
        return u >= 0 && v >= 0 && u < w && v < h && label[std::size_t(v) * w + u] == best_label;
    };
    const int su = int(best_start % std::size_t(w));
    const int sv = int(best_start / std::size_t(w));
    std::vector<Pixel> border{{double(su), double(sv)}};

    // Moore neighbour tracing. The raster-first pixel's west neighbour is
    // background, so start the sweep from there.
    int pu = su;
    int pv = sv;
    int back = 4;
    int first_move = -1;
    const std::size_t guard = 4 * best_area + 16;
    for (std::size_t step = 0; step < guard; ++step) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            if (on(pu + kDu[d], pv + kDv[d])) {
                found = d;
                break;
            }
        }
        if (found < 0) break; // isolated pixel
        if (pu == su && pv == sv) {
            if (first_move < 0) first_move = found;
            else if (found == first_move) break;
        }
        const int prev = (found + 7) % 8; // last background pixel checked
        const int bu = pu + kDu[prev];
        const int bv = pv + kDv[prev];
        pu += kDu[found];
        pv += kDv[found];
        back = direction_of(bu - pu, bv - pv);
        if (!(pu == su && pv == sv)) border.push_back({double(pu), double(pv)});
    }
    return border;
}

} // namespace pipeline

FeatureObservation extract_feature(const ImageFrame& frame, const ImageFrame& background, double expected_diameter_px,
                                   std::uint64_t seed, const ExtractionParams& params) {
    if (!(expected_diameter_px > 3.0)) throw ConfigError("expected particle diameter must exceed 3 pixels");
    const double dia = expected_diameter_px;
    FeatureObservation obs;

    const auto diff = pipeline::subtract_background(frame, background);
    int bin_window = static_cast<int>(std::lround(2.0 * dia));
    if (bin_window % 2 == 0) ++bin_window;
    bin_window = std::max(bin_window, 3);
    const auto fg = pipeline::adaptive_binarize(diff, frame.width, frame.height, bin_window, params.threshold_offset);

    const int win = static_cast<int>(std::ceil(1.5 * dia));
    const int stride = std::max(1, static_cast<int>(std::floor(dia / 2.0)));
    const auto best = pipeline::best_window(fg, win, stride);
    const double min_count = params.min_fill * std::numbers::pi * dia * dia / 4.0;
    if (double(best.count) < min_count) {
        obs.reason = "particle not detected";
        return obs;
    }

    const int pad = static_cast<int>(std::ceil(dia / 2.0)) + 1;
    const auto closed =
        pipeline::close3x3(fg, best.u0 - pad, best.v0 - pad, best.u0 + best.size + pad, best.v0 + best.size + pad);
    const auto border = pipeline::largest_blob_border(closed);
    if (border.size() < params.min_contour) {
        obs.reason = "contour too short";
        return obs;
    }

    const auto fit = ransac_ellipse(border, params.ransac, seed);
    if (!fit) {
        obs.reason = "ellipse fit failed";
        return obs;
    }
    obs.u = fit->ellipse.center.u;
    obs.v = fit->ellipse.center.v;
    obs.semi_major = fit->ellipse.semi_major;
    obs.semi_minor = fit->ellipse.semi_minor;
    if (obs.u < -0.5 || obs.v < -0.5 || obs.u > frame.width - 0.5 || obs.v > frame.height - 0.5) {
        obs.reason = "fitted center outside image";
        return obs;
    }
    obs.valid = true;
    return obs;
}

} // namespace acoustrap
