//! Adaptive Gauss–Kronrod (G7/K15) quadrature of `tau^d int_{|t|<=1/tau} |F^(t)| dt`
//! over the max-norm cube, for d = 1 and d = 2.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CharacteristicFunction, CHARFN_SCHEMA};
use crate::error::{Error, Result};
use crate::scalar::compensated_sum;

pub const DEFAULT_PANEL_BUDGET: usize = 200_000;

/// Cap on the initial panel count per axis.
const MAX_INITIAL_PER_AXIS: usize = 20_000;

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights at XK[1], XK[3], XK[5], XK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 nodes on [-1, 1] with Kronrod and Gauss weights (0 where not a Gauss node).
fn rule() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for i in 0..7 {
        let g = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        out[i] = (-XK[i], WK[i], g);
        out[14 - i] = (XK[i], WK[i], g);
    }
    out[7] = (0.0, WK[7], WG[3]);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct EsseenEstimate {
    pub value: f64,
    pub quadrature_error: f64,
    pub tau: f64,
    pub panels: usize,
}

impl EsseenEstimate {
    pub fn to_json_value(&self) -> Value {
        json!({
            "schema": CHARFN_SCHEMA,
            "type": "esseen",
            "value": self.value,
            "quadrature_error": self.quadrature_error,
            "tau": self.tau,
            "panels": self.panels,
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::invalid("expected an object"))?;
        let allowed = [
            "schema",
            "type",
            "value",
            "quadrature_error",
            "tau",
            "panels",
        ];
        if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::invalid(format!("unknown field `{k}`")));
        }
        if obj.get("schema").and_then(Value::as_str) != Some(CHARFN_SCHEMA)
            || obj.get("type").and_then(Value::as_str) != Some("esseen")
        {
            return Err(Error::invalid("expected schema charfn/v1, type esseen"));
        }
        let num = |k: &str| {
            obj.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::invalid(format!("bad `{k}`")))
        };
        let est = EsseenEstimate {
            value: num("value")?,
            quadrature_error: num("quadrature_error")?,
            tau: num("tau")?,
            panels: obj
                .get("panels")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::invalid("bad `panels`"))? as usize,
        };
        if est.value < 0.0 || est.quadrature_error < 0.0 || est.tau <= 0.0 {
            return Err(Error::invalid(
                "value and error must be nonnegative, tau positive",
            ));
        }
        Ok(est)
    }
}

impl Serialize for EsseenEstimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for EsseenEstimate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Self::from_json_value(&Value::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Esséen functional with the default panel budget.
pub fn esseen_integral<C: CharacteristicFunction + ?Sized>(
    obj: &C,
    tau: f64,
    tol: f64,
) -> Result<EsseenEstimate> {
    esseen_integral_with(obj, tau, tol, DEFAULT_PANEL_BUDGET)
}

/// Esséen functional `tau^d int_{[-1/tau, 1/tau]^d} |F^(t)| dt`.
///
/// `|F^|` is even under `t -> -t`, so the last axis is integrated over
/// `[0, 1/tau]` and the result doubled. Panels with the largest `|K15 - G7|`
/// are bisected until the summed estimate is at most `tol`.
pub fn esseen_integral_with<C: CharacteristicFunction + ?Sized>(
    obj: &C,
    tau: f64,
    tol: f64,
    max_panels: usize,
) -> Result<EsseenEstimate> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid("tau must be positive and finite"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    let d = obj.dim();
    let r = 1.0 / tau;
    let omega = obj.frequency_bounds();
    // one initial panel per half period of the fastest oscillation
    let per_axis = |w: f64, len: f64| {
        ((len * w / std::f64::consts::PI).ceil() as usize).clamp(1, MAX_INITIAL_PER_AXIS)
    };
    let scale = 2.0 * tau.powi(d as i32);
    let (raw, err, panels) = match d {
        1 => {
            let n0 = per_axis(omega[0], r);
            adaptive(
                (0..n0)
                    .map(|i| Cell::Line(r * i as f64 / n0 as f64, r * (i + 1) as f64 / n0 as f64))
                    .collect(),
                |t| obj.cf_abs(t),
                tol / scale,
                max_panels,
            )
        }
        2 => {
            let n1 = per_axis(omega[0], 2.0 * r);
            let n2 = per_axis(omega[1], r);
            if n1 * n2 > max_panels {
                return Err(Error::ToleranceUnreachable {
                    tol,
                    reached: f64::INFINITY,
                    panels: n1 * n2,
                });
            }
            let mut cells = Vec::with_capacity(n1 * n2);
            for i in 0..n1 {
                for j in 0..n2 {
                    let x0 = -r + 2.0 * r * i as f64 / n1 as f64;
                    let x1 = -r + 2.0 * r * (i + 1) as f64 / n1 as f64;
                    let y0 = r * j as f64 / n2 as f64;
                    let y1 = r * (j + 1) as f64 / n2 as f64;
                    cells.push(Cell::Rect([x0, x1], [y0, y1]));
                }
            }
            adaptive(cells, |t| obj.cf_abs(t), tol / scale, max_panels)
        }
        _ => return Err(Error::invalid("Esséen quadrature supports d <= 2")),
    };
    match (raw, err) {
        (v, e) if e * scale <= tol => Ok(EsseenEstimate {
            value: v * scale,
            quadrature_error: e * scale,
            tau,
            panels,
        }),
        (_, e) => Err(Error::ToleranceUnreachable {
            tol,
            reached: e * scale,
            panels,
        }),
    }
}

#[derive(Clone, Copy, Debug)]
enum Cell {
    Line(f64, f64),
    Rect([f64; 2], [f64; 2]),
}

impl Cell {
    fn split(self) -> Vec<Cell> {
        match self {
            Cell::Line(a, b) => {
                let m = 0.5 * (a + b);
                vec![Cell::Line(a, m), Cell::Line(m, b)]
            }
            Cell::Rect([x0, x1], [y0, y1]) => {
                let (xm, ym) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
                vec![
                    Cell::Rect([x0, xm], [y0, ym]),
                    Cell::Rect([x0, xm], [ym, y1]),
                    Cell::Rect([xm, x1], [y0, ym]),
                    Cell::Rect([xm, x1], [ym, y1]),
                ]
            }
        }
    }

    fn order_key(&self) -> (f64, f64) {
        match *self {
            Cell::Line(a, _) => (a, 0.0),
            Cell::Rect([x0, _], [y0, _]) => (x0, y0),
        }
    }

    /// Kronrod value and `|K - G|`.
    fn integrate<F: Fn(&[f64]) -> f64>(&self, f: &F) -> (f64, f64) {
        let rule = rule();
        match *self {
            Cell::Line(a, b) => {
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                let (mut k, mut g) = (0.0, 0.0);
                for &(x, wk, wg) in &rule {
                    let v = f(&[c + h * x]);
                    k += wk * v;
                    g += wg * v;
                }
                (k * h, ((k - g) * h).abs())
            }
            Cell::Rect([x0, x1], [y0, y1]) => {
                let (cx, hx) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
                let (cy, hy) = (0.5 * (y0 + y1), 0.5 * (y1 - y0));
                let (mut k, mut g) = (0.0, 0.0);
                for &(x, wkx, wgx) in &rule {
                    for &(y, wky, wgy) in &rule {
                        let v = f(&[cx + hx * x, cy + hy * y]);
                        k += wkx * wky * v;
                        g += wgx * wgy * v;
                    }
                }
                let area = hx * hy;
                (k * area, ((k - g) * area).abs())
            }
        }
    }
}

/// Returns (integral, error estimate, panel count); stops early when the
/// panel budget leaves no room to split.
fn adaptive<F: Fn(&[f64]) -> f64 + Sync>(
    cells: Vec<Cell>,
    f: F,
    tol: f64,
    max_panels: usize,
) -> (f64, f64, usize) {
    let eval = |cs: Vec<Cell>| -> Vec<(Cell, f64, f64)> {
        cs.into_par_iter()
            .map(|c| {
                let (v, e) = c.integrate(&f);
                (c, v, e)
            })
            .collect()
    };
    let mut panels = eval(cells);
    loop {
        let total_err = compensated_sum(panels.iter().map(|p| p.2));
        if total_err <= tol {
            let value = compensated_sum(panels.iter().map(|p| p.1));
            return (value, total_err, panels.len());
        }
        // bisect the worst panels covering half of the error mass
        let mut order: Vec<usize> = (0..panels.len()).collect();
        order.sort_by(|&i, &j| panels[j].2.total_cmp(&panels[i].2).then(i.cmp(&j)));
        let mut chosen = vec![false; panels.len()];
        let mut acc = 0.0;
        let mut count = 0;
        let growth = panels.first().map_or(1, |p| p.0.split().len() - 1);
        for &i in &order {
            if acc >= 0.5 * total_err || panels.len() + (count + 1) * growth > max_panels {
                break;
            }
            chosen[i] = true;
            acc += panels[i].2;
            count += 1;
        }
        if count == 0 {
            let value = compensated_sum(panels.iter().map(|p| p.1));
            return (value, total_err, panels.len());
        }
        let mut keep = Vec::with_capacity(panels.len() + count * growth);
        let mut fresh = Vec::with_capacity(count * (growth + 1));
        for (i, p) in panels.into_iter().enumerate() {
            if chosen[i] {
                fresh.extend(p.0.split());
            } else {
                keep.push(p);
            }
        }
        keep.extend(eval(fresh));
        keep.sort_by(|a, b| {
            let (ka, kb) = (a.0.order_key(), b.0.order_key());
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        });
        panels = keep;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::cf_eval;
    use crate::measures::{CoefficientVector, CompoundPoissonSpec, DiscreteDistribution};

    fn h(a: &[f64], lambda: f64) -> CompoundPoissonSpec {
        CompoundPoissonSpec::h_measure(
            &CoefficientVector::from_scalars(a.to_vec()).unwrap(),
            lambda,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn point_mass_integral() {
        let f = DiscreteDistribution::point_mass(vec![0.0]);
        let e = esseen_integral(&f, 1.0, 1e-12).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        let f2 = DiscreteDistribution::point_mass(vec![0.0, 0.0]);
        let e2 = esseen_integral(&f2, 0.5, 1e-12).unwrap();
        assert!((e2.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn vanishing_rate_recovers_point_mass() {
        let e = esseen_integral(&h(&[1.0, 2.0], 1e-12), 1.0, 1e-12).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn matches_dense_midpoint_reference() {
        let spec = h(&[1.0, 1.0, 1.0, 1.0], 1.0);
        let e = esseen_integral(&spec, 1.0, 1e-12).unwrap();
        let n = 1_000_000;
        let step = 2.0 / n as f64;
        let reference = compensated_sum(
            (0..n).map(|i| cf_eval(&spec, &[-1.0 + (i as f64 + 0.5) * step], None).re * step),
        );
        assert!(
            (e.value - reference).abs() < 1e-8,
            "{} vs {}",
            e.value,
            reference
        );
        assert!(e.quadrature_error <= 1e-12);
    }

    #[test]
    fn oscillatory_discrete_law() {
        // |cos(50 t)| over [-1, 1]
        let f = DiscreteDistribution::new(1, vec![(vec![-50.0], 0.5), (vec![50.0], 0.5)]).unwrap();
        let e = esseen_integral(&f, 1.0, 1e-9).unwrap();
        let exact = {
            // int_{-1}^{1} |cos 50t| dt = (1/50) int_{-50}^{50} |cos u| du
            let full = (50.0 / std::f64::consts::PI).floor();
            let rest = 50.0 - full * std::f64::consts::PI;
            let tail = if rest <= std::f64::consts::FRAC_PI_2 {
                rest.sin()
            } else {
                2.0 - rest.sin()
            };
            2.0 * (2.0 * full + tail) / 50.0
        };
        assert!((e.value - exact).abs() < 1e-8, "{} vs {}", e.value, exact);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = DiscreteDistribution::new(1, vec![(vec![-50.0], 0.5), (vec![50.0], 0.5)]).unwrap();
        assert!(matches!(
            esseen_integral_with(&f, 1.0, 1e-14, 40),
            Err(Error::ToleranceUnreachable { .. })
        ));
    }

    #[test]
    fn two_dimensional_product() {
        // independent coordinates: the integral factorizes
        let a = CoefficientVector::new(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let spec = CompoundPoissonSpec::h_measure(&a, 1.0, 1.0).unwrap();
        let e = esseen_integral(&spec, 1.0, 1e-10).unwrap();
        let e1 = esseen_integral(&h(&[1.0], 1.0), 1.0, 1e-12).unwrap();
        let e2 = esseen_integral(&h(&[2.0], 1.0), 1.0, 1e-12).unwrap();
        assert!((e.value - e1.value * e2.value).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let e = esseen_integral(&h(&[1.0, 3.0], 0.5), 0.5, 1e-10).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        let back: EsseenEstimate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
