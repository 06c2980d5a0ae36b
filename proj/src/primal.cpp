// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/primal.h"

#include "resid/error.h"
#include "resid/parallel.h"

namespace resid {

double nee_mis_weight(double pdf_a, double pdf_b) {
    double s = pdf_a + pdf_b;
    return s > 0 ? pdf_a / s : 0.0;
}

Rgb trace_radiance(const ScenePair &pair, FrameId view, Vec2 raster_pixel, const PathTracerConfig &cfg,
                   Sampler &s) {
    const Camera &cam = pair.camera();
    Vec2 raster = raster_pixel + s.next2();
    const double light_area = pair.surface_area(SurfaceSet::Emitter, view);
    if (!(light_area > 0)) return {};
    Vec3 w = cam.direction(raster);
    auto hit = pair.intersect({cam.position(), w}, view);
    if (!hit) return {};

    const double p_light = 1.0 / light_area;
    Rgb radiance, beta(1.0);
    if (pair.is_emitter(hit->prim)) radiance += pair.emitted(hit->prim, -w);

    Vec3 prev = cam.position();
    HitRecord cur = *hit;
    for (int nverts = 2; nverts + 1 <= cfg.max_vertices; ++nverts) {
        const Material &m = pair.material(cur.prim, view);
        const Vec3 wi = normalize(prev - cur.p);

        if (cfg.nee) {
            SurfaceSample ls = pair.sample_surface(SurfaceSet::Emitter, view, s.next2());
            Vec3 d = ls.p - cur.p;
            double dist2 = length_squared(d);
            Vec3 wl = d / std::sqrt(dist2);
            double cos_l = -dot(ls.n, wl);
            if (ls.prim != cur.prim && cos_l > 0) {
                Rgb f = bsdf_eval(m, cur.n, wi, wl);
                if (!f.is_black() && pair.visible(cur.p, cur.prim, ls.p, ls.prim, view)) {
                    double p_l = ls.pdf * dist2 / cos_l;
                    double wgt = nee_mis_weight(p_l, bsdf_pdf(m, cur.n, wi, wl));
                    radiance += beta * f * pair.emitted(ls.prim, -wl) * (std::abs(dot(cur.n, wl)) / p_l * wgt);
                }
            }
        }

        auto bs = bsdf_sample(m, cur.n, wi, s.next2());
        if (!bs) break;
        beta *= bsdf_eval(m, cur.n, wi, bs->wo) * (std::abs(dot(cur.n, bs->wo)) / bs->pdf);
        if (beta.is_black()) break;
        if (cfg.russian_roulette && nverts >= 4) {
            double q = std::min(0.95, beta.max_component());
            if (s.next() >= q) break;
            beta *= 1.0 / q;
        }
        auto next = pair.intersect({cur.p, bs->wo}, view, cur.prim);
        if (!next) break;
        if (pair.is_emitter(next->prim)) {
            Rgb le = pair.emitted(next->prim, -bs->wo);
            if (!le.is_black()) {
                double wgt = 1;
                if (cfg.nee) {
                    double cos_l = -dot(next->n, bs->wo);
                    double p_l = p_light * next->t * next->t / cos_l;
                    wgt = nee_mis_weight(bs->pdf, p_l);
                }
                radiance += beta * le * wgt;
            }
        }
        prev = cur.p;
        cur = *next;
    }
    return radiance;
}

RenderResult render_pixels(int width, int height, int spp, int batches, int threads,
                           const PixelEstimator &estimate) {
    if (spp < 1) throw ValidationError("spp must be at least 1");
    if (batches < 1 || spp % batches != 0)
        throw ValidationError("spp must be a positive multiple of the batch count");
    const int per_batch = spp / batches;
    RenderResult out;
    out.mean = Image(width, height);
    if (batches >= 2) out.variance = Image(width, height);

    constexpr int Tile = 16;
    const int tiles_x = (width + Tile - 1) / Tile, tiles_y = (height + Tile - 1) / Tile;
    parallel_for(tiles_x * tiles_y, resolve_threads(threads), [&](int tile, int) {
        int x0 = (tile % tiles_x) * Tile, y0 = (tile / tiles_x) * Tile;
        for (int y = y0; y < std::min(height, y0 + Tile); ++y)
            for (int x = x0; x < std::min(width, x0 + Tile); ++x) {
                const int pixel = y * width + x;
                Rgb total, mean_b, m2;
                for (int b = 0; b < batches; ++b) {
                    Rgb sum;
                    for (int i = 0; i < per_batch; ++i) {
                        int sample = b * per_batch + i;
                        sum += estimate(pixel, {double(x), double(y)}, sample);
                    }
                    total += sum;
                    // Welford over batch means.
                    Rgb bm = sum / per_batch;
                    Rgb delta = bm - mean_b;
                    mean_b += delta / double(b + 1);
                    m2 += delta * (bm - mean_b);
                }
                out.mean.at(x, y) = total / spp;
                if (batches >= 2) out.variance.at(x, y) = m2 / (double(batches - 1) * batches);
            }
    });
    return out;
}

RenderResult render(const ScenePair &pair, FrameId view, const PathTracerConfig &cfg) {
    if (cfg.max_vertices < 2) throw ValidationError("max path length must be at least 2 vertices");
    const Camera &cam = pair.camera();
    return render_pixels(cam.width(), cam.height(), cfg.spp, cfg.batches, cfg.threads,
                         [&](int pixel, Vec2 raster, int sample) {
                             Sampler s = pixel_sampler(cfg.seed, pixel, sample);
                             return trace_radiance(pair, view, raster, cfg, s);
                         });
}

Path trace_camera_path(const ScenePair &pair, FrameId view, Vec2 raster_pixel, int max_vertices,
                       Sampler &s) {
    const Camera &cam = pair.camera();
    Path path;
    path.frame = view;
    path.v.push_back({cam.position(), {}, -1, false, {-1, -1}});
    path.pdf_fwd.push_back(1);
    Vec2 raster = raster_pixel + s.next2();
    path.pixel = raster;
    Vec3 w = cam.direction(raster);
    auto hit = pair.intersect({cam.position(), w}, view);
    if (hit) {
        path.v.push_back({hit->p, hit->n, hit->prim, hit->dynamic, {-1, -1}});
        path.pdf_fwd.push_back(cam.image_direction_pdf(cam.cos_theta(w)) *
                               solid_angle_to_area(cam.position(), hit->p, hit->n));
    }
    while (hit && path.size() < max_vertices) {
        const PathVertex &cur = path.v.back();
        Vec3 wi = normalize(path.v[path.size() - 2].p - cur.p);
        Vec2 u = s.next2();
        const Material &m = pair.material(cur.prim, view);
        auto bs = bsdf_sample(m, cur.n, wi, u);
        if (!bs) break;
        hit = pair.intersect({cur.p, bs->wo}, view, cur.prim);
        if (!hit) break;
        double pdf = bs->pdf * solid_angle_to_area(cur.p, hit->p, hit->n);
        path.v.push_back({hit->p, hit->n, hit->prim, hit->dynamic, u});
        path.pdf_fwd.push_back(pdf);
    }
    // Reverse densities: BSDF sampling at v[i+1] arriving from v[i+2].
    const int k = path.size();
    path.pdf_rev.assign(k, 0.0);
    path.pdf_rev[0] = 1;
    for (int i = 1; i + 2 < k; ++i) {
        const PathVertex &at = path.v[i + 1];
        Vec3 wi = normalize(path.v[i + 2].p - at.p), wo = normalize(path.v[i].p - at.p);
        path.pdf_rev[i] = bsdf_pdf(pair.material(at.prim, view), at.n, wi, wo) *
                          solid_angle_to_area(at.p, path.v[i].p, path.v[i].n);
    }
    compute_crossings(pair, path);
    return path;
}

} // namespace resid
