//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use drlc_core::geom::Vec2;
use drlc_core::roadnet::{Lane, LaneGeometry, RoadNetwork, Turn};
use rand::Rng;

/// Closest centerline distance found by sampling every lane at `step` meters.
pub fn dense_closest(lanes: &[Lane], p: Vec2, step: f64) -> (u32, f64) {
    let mut best = (u32::MAX, f64::INFINITY);
    for lane in lanes {
        let d = dense_lane_distance(lane, p, step);
        if d < best.1 {
            best = (lane.id.0, d);
        }
    }
    best
}

pub fn dense_lane_distance(lane: &Lane, p: Vec2, step: f64) -> f64 {
    let mut best = f64::INFINITY;
    match lane.geometry {
        LaneGeometry::Straight { start, end } => {
            let (dx, dy) = (end.x - start.x, end.y - start.y);
            let len = (dx * dx + dy * dy).sqrt();
            let n = (len / step).ceil() as usize;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                let (x, y) = (start.x + t * dx, start.y + t * dy);
                best = best.min(((p.x - x).powi(2) + (p.y - y).powi(2)).sqrt());
            }
        }
        LaneGeometry::Arc {
            center,
            radius,
            start_angle,
            end_angle,
            ..
        } => {
            let span = end_angle - start_angle;
            let n = (span.abs() * radius / step).ceil() as usize;
            for i in 0..=n {
                let a = start_angle + span * i as f64 / n as f64;
                let (x, y) = (center.x + radius * a.cos(), center.y + radius * a.sin());
                best = best.min(((p.x - x).powi(2) + (p.y - y).powi(2)).sqrt());
            }
        }
    }
    best
}

/// A network of `n` unconnected straight and arc lanes inside a 200 m box.
pub fn random_network<R: Rng>(rng: &mut R, n: usize) -> RoadNetwork {
    let lanes = (0..n as u32)
        .map(|id| {
            let c = Vec2::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
            if rng.random_bool(0.5) {
                let len = rng.random_range(2.0..80.0);
                let dir = Vec2::from_angle(rng.random_range(-PI..PI));
                Lane::straight(id, c, c + dir * len, 4.0, 20.0)
            } else {
                let radius = rng.random_range(3.0..50.0);
                let start = rng.random_range(-PI..PI);
                let span = rng.random_range(0.1..TAU);
                if rng.random_bool(0.5) {
                    Lane::arc(id, c, radius, start, start + span, Turn::Ccw, 4.0, 20.0)
                } else {
                    Lane::arc(id, c, radius, start, start - span, Turn::Cw, 4.0, 20.0)
                }
            }
        })
        .collect();
    RoadNetwork::new(lanes, BTreeMap::new(), vec![]).expect("valid random network")
}

/// Three-branch lane heading difference.
pub fn lhd_table(l: f64, c: f64) -> f64 {
    if l - c < -PI {
        l - c + 2.0 * PI
    } else if l - c > PI {
        l - c - 2.0 * PI
    } else {
        l - c
    }
}

/// Effective-speed reward, transcribed directly.
pub fn effective_speed_reward(crashed: bool, v: f64, lhd: f64, d: f64) -> f64 {
    if crashed {
        -10.0
    } else if v >= 0.0 {
        lhd.abs().cos() * v / (20.0 * f64::max(1.0, d.abs()))
    } else {
        0.0
    }
}

/// Normalized action-change jerk: (accel, steer, total).
pub fn jerk_oracle(prev: (f64, f64), cur: (f64, f64)) -> (f64, f64, f64) {
    let (d0, a0) = prev;
    let (d1, a1) = cur;
    let ja = (a0 - a1) / (5.0 - (-5.0));
    let js = (d1 - d0) / (PI / 2.0 - (-PI / 2.0));
    (ja, js, (ja + js) / 2.0)
}

/// Advantages by the explicit double sum over each episode.
pub fn gae_brute(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    let delta: Vec<f64> = (0..n)
        .map(|t| {
            let next = if dones[t] { 0.0 } else { values[t + 1] };
            rewards[t] + gamma * next - values[t]
        })
        .collect();
    (0..n)
        .map(|t| {
            let mut sum = 0.0;
            for k in 0..n - t {
                sum += (gamma * lambda).powi(k as i32) * delta[t + k];
                if dones[t + k] {
                    break;
                }
            }
            sum
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &bi)| {
        let mut row = r.clone();
        row.push(bi);
        row
    }).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - s) / m[row][row];
    }
    x
}

/// Random symmetric positive-definite matrix `QᵀQ + n·I`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let q: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s: f64 = (0..n).map(|k| q[k][i] * q[k][j]).sum();
                    s + if i == j { n as f64 } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Scalar-by-scalar MLP forward pass over the flat parameter layout:
/// per layer, weights indexed `w[i * out + o]`, then biases.
pub fn mlp_scalar(sizes: &[usize], params: &[f64], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let mut off = 0;
    for l in 0..sizes.len() - 1 {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let mut out = vec![0.0; n_out];
        for o in 0..n_out {
            let mut z = params[off + n_in * n_out + o];
            for i in 0..n_in {
                z += h[i] * params[off + i * n_out + o];
            }
            out[o] = if l + 2 < sizes.len() { z.tanh() } else { z };
        }
        off += n_in * n_out + n_out;
        h = out;
    }
    h
}

/// Circle through points by algebraic least squares; returns (center, radius).
pub fn fit_circle(points: &[Vec2]) -> (Vec2, f64) {
    // Solve [x y 1]·[a b c]ᵀ = x² + y² in the least-squares sense.
    let mut ata = vec![vec![0.0; 3]; 3];
    let mut atb = vec![0.0; 3];
    for p in points {
        let row = [p.x, p.y, 1.0];
        let rhs = p.x * p.x + p.y * p.y;
        for i in 0..3 {
            atb[i] += row[i] * rhs;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let s = dense_solve(&ata, &atb);
    let center = Vec2::new(s[0] / 2.0, s[1] / 2.0);
    (center, (s[2] + center.x * center.x + center.y * center.y).sqrt())
}

/// Rectangle overlap decided by testing a dense grid of points of each
/// footprint for containment in the other.
pub fn rect_overlap_by_sampling(
    a: (Vec2, f64, f64, f64),
    b: (Vec2, f64, f64, f64),
    per_side: usize,
) -> bool {
    let inside = |r: (Vec2, f64, f64, f64), p: Vec2| {
        let (c, h, len, wid) = r;
        let (dx, dy) = (p.x - c.x, p.y - c.y);
        let u = dx * h.cos() + dy * h.sin();
        let v = -dx * h.sin() + dy * h.cos();
        u.abs() <= len / 2.0 && v.abs() <= wid / 2.0
    };
    let points = |r: (Vec2, f64, f64, f64)| {
        let (c, h, len, wid) = r;
        let mut out = Vec::new();
        for i in 0..=per_side {
            for j in 0..=per_side {
                let u = -len / 2.0 + len * i as f64 / per_side as f64;
                let v = -wid / 2.0 + wid * j as f64 / per_side as f64;
                out.push(Vec2::new(c.x + u * h.cos() - v * h.sin(), c.y + u * h.sin() + v * h.cos()));
            }
        }
        out
    };
    points(a).into_iter().any(|p| inside(b, p)) || points(b).into_iter().any(|p| inside(a, p))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

pub mod checks;
