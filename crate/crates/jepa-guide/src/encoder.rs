//! Smooth feature maps with analytic Jacobians.
//!
//! Every encoder maps `R^n -> R^d`. The seeded constructors all build
//! overcomplete maps (`d > n`), which keeps the Jacobian tall and its full
//! singular spectrum length `n`. Finite differencing lives here too, but only
//! as a cross-check: production scoring always uses the analytic Jacobian.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{format_float, norm, tolerances, Matrix};

/// A differentiable feature map `f: R^n -> R^d`.
pub trait Encoder {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// `f(x)`; `x.len()` must equal `input_dim`.
    fn forward(&self, x: &[f64]) -> Vec<f64>;
    /// Analytic Jacobian, `output_dim x input_dim`.
    fn jacobian(&self, x: &[f64]) -> Matrix;
}

// ---------------------------------------------------------------------------
// Concrete encoders
// ---------------------------------------------------------------------------

/// `f(x) = A x`. The Jacobian is constant, so the spectral score is too;
/// useful as a ground-truth fixture and as the bridge from plain matrices.
#[derive(Debug, Clone)]
pub struct LinearEncoder {
    a: Matrix,
}

impl LinearEncoder {
    pub fn new(a: Matrix) -> Self {
        Self { a }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }
}

impl Encoder for LinearEncoder {
    fn input_dim(&self) -> usize {
        self.a.cols()
    }

    fn output_dim(&self) -> usize {
        self.a.rows()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.a.mul_vec(x)
    }

    fn jacobian(&self, _x: &[f64]) -> Matrix {
        self.a.clone()
    }
}

/// One-hidden-layer tanh network `f(x) = W2 tanh(W1 x + b1) + b2`.
/// Jacobian: `W2 diag(1 - tanh^2(W1 x + b1)) W1`.
#[derive(Debug, Clone)]
pub struct TanhMlpEncoder {
    w1: Matrix,
    b1: Vec<f64>,
    w2: Matrix,
    b2: Vec<f64>,
}

impl TanhMlpEncoder {
    /// Seeded Gaussian init with variance `2 / fan_in` per layer, which keeps
    /// the Jacobian spectrum order-1. Requires `output_dim > input_dim`.
    pub fn new(input_dim: usize, hidden_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        if output_dim <= input_dim {
            return Err(Error::EncoderNotOvercomplete {
                input: input_dim,
                output: output_dim,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd1 = (2.0 / input_dim as f64).sqrt();
        let sd2 = (2.0 / hidden_dim as f64).sqrt();
        let mut draw = |n: usize, sd: f64| -> Vec<f64> {
            (0..n)
                .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect()
        };
        let w1 = Matrix::new(hidden_dim, input_dim, draw(hidden_dim * input_dim, sd1))?;
        let b1 = draw(hidden_dim, sd1);
        let w2 = Matrix::new(output_dim, hidden_dim, draw(output_dim * hidden_dim, sd2))?;
        let b2 = draw(output_dim, sd2);
        Ok(Self { w1, b1, w2, b2 })
    }

    /// Assembles from explicit weights; shapes must chain. No overcompleteness
    /// requirement, so tests can build square fixtures.
    pub fn from_parts(w1: Matrix, b1: Vec<f64>, w2: Matrix, b2: Vec<f64>) -> Result<Self> {
        if b1.len() != w1.rows() || w2.cols() != w1.rows() || b2.len() != w2.rows() {
            return Err(Error::DimensionMismatch {
                op: "tanh mlp assembly",
                left: format!("w1 {}x{}, b1 {}", w1.rows(), w1.cols(), b1.len()),
                right: format!("w2 {}x{}, b2 {}", w2.rows(), w2.cols(), b2.len()),
            });
        }
        Ok(Self { w1, b1, w2, b2 })
    }

    fn preactivation(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.w1.mul_vec(x);
        for (zi, bi) in z.iter_mut().zip(&self.b1) {
            *zi += bi;
        }
        z
    }
}

impl Encoder for TanhMlpEncoder {
    fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    fn output_dim(&self) -> usize {
        self.w2.rows()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let h: Vec<f64> = self.preactivation(x).iter().map(|z| z.tanh()).collect();
        let mut y = self.w2.mul_vec(&h);
        for (yi, bi) in y.iter_mut().zip(&self.b2) {
            *yi += bi;
        }
        y
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let gate: Vec<f64> = self
            .preactivation(x)
            .iter()
            .map(|z| 1.0 - z.tanh() * z.tanh())
            .collect();
        // W2 diag(gate) W1 without materializing the diagonal.
        let gated = Matrix::from_fn(self.w1.rows(), self.w1.cols(), |i, j| {
            gate[i] * self.w1.get(i, j)
        })
        .expect("finite weights stay finite under tanh gating");
        self.w2.mul(&gated).expect("shapes chain by construction")
    }
}

/// Paired random Fourier features `f(x) = [cos(Wx); sin(Wx)]` with
/// `W = gamma * G`, `G` seeded Gaussian.
///
/// `‖f(x)‖^2 = d/2` for every input. A direct consequence: `JᵀJ = WᵀW`
/// independently of `x`, so the *exact* spectral score of this encoder is the
/// same everywhere. Truncated scores computed through a frozen range do vary;
/// input-sensitive exact scores need [`PhaseRffEncoder`] or the MLP.
#[derive(Debug, Clone)]
pub struct RffEncoder {
    omega: Matrix,
    gamma: f64,
}

impl RffEncoder {
    /// `output_dim` must be even (cos/sin pairs) and exceed `input_dim`.
    /// `gamma` is the frequency bandwidth; 1 is the neutral default.
    pub fn new(input_dim: usize, output_dim: usize, gamma: f64, seed: u64) -> Result<Self> {
        if output_dim % 2 != 0 {
            return Err(Error::OddFeatureDim { dim: output_dim });
        }
        if output_dim <= input_dim {
            return Err(Error::EncoderNotOvercomplete {
                input: input_dim,
                output: output_dim,
            });
        }
        let omega = crate::matrix::gaussian_matrix(output_dim / 2, input_dim, seed)?.scale(gamma)?;
        Ok(Self { omega, gamma })
    }

    fn from_raw(omega: Matrix, gamma: f64) -> Self {
        Self { omega, gamma }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Encoder for RffEncoder {
    fn input_dim(&self) -> usize {
        self.omega.cols()
    }

    fn output_dim(&self) -> usize {
        2 * self.omega.rows()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let z = self.omega.mul_vec(x);
        let mut out = Vec::with_capacity(2 * z.len());
        out.extend(z.iter().map(|v| v.cos()));
        out.extend(z.iter().map(|v| v.sin()));
        out
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let z = self.omega.mul_vec(x);
        let m = self.omega.rows();
        Matrix::from_fn(2 * m, self.omega.cols(), |i, j| {
            if i < m {
                -z[i].sin() * self.omega.get(i, j)
            } else {
                z[i - m].cos() * self.omega.get(i - m, j)
            }
        })
        .expect("bounded trig of finite values")
    }
}

/// Phase-shifted Fourier features `f_i(x) = cos(w_i . x + phi_i)` with `d`
/// independent rows. Unlike the paired map, its Jacobian spectrum genuinely
/// depends on the input, so exact scores separate rare from common points.
#[derive(Debug, Clone)]
pub struct PhaseRffEncoder {
    omega: Matrix,
    phases: Vec<f64>,
    gamma: f64,
}

impl PhaseRffEncoder {
    pub fn new(input_dim: usize, output_dim: usize, gamma: f64, seed: u64) -> Result<Self> {
        if output_dim <= input_dim {
            return Err(Error::EncoderNotOvercomplete {
                input: input_dim,
                output: output_dim,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..output_dim * input_dim)
            .map(|_| gamma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let omega = Matrix::new(output_dim, input_dim, data)?;
        let phases: Vec<f64> = (0..output_dim)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        Ok(Self { omega, phases, gamma })
    }

    fn from_raw(omega: Matrix, phases: Vec<f64>, gamma: f64) -> Self {
        Self { omega, phases, gamma }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Encoder for PhaseRffEncoder {
    fn input_dim(&self) -> usize {
        self.omega.cols()
    }

    fn output_dim(&self) -> usize {
        self.omega.rows()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.omega
            .mul_vec(x)
            .iter()
            .zip(&self.phases)
            .map(|(z, p)| (z + p).cos())
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let z = self.omega.mul_vec(x);
        Matrix::from_fn(self.omega.rows(), self.omega.cols(), |i, j| {
            -(z[i] + self.phases[i]).sin() * self.omega.get(i, j)
        })
        .expect("bounded trig of finite values")
    }
}

// ---------------------------------------------------------------------------
// Jacobian cross-checks
// ---------------------------------------------------------------------------

/// Central finite-difference Jacobian. A debugging and certification aid, not
/// a production path. Fails if any probed output is non-finite, naming the
/// offending output index.
pub fn jacobian_fd(enc: &dyn Encoder, x: &[f64], step: f64) -> Result<Matrix> {
    assert_eq!(x.len(), enc.input_dim(), "input length must match encoder");
    let (d, n) = (enc.output_dim(), enc.input_dim());
    let mut data = vec![0.0; d * n];
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += step;
        xm[j] -= step;
        let fp = enc.forward(&xp);
        let fm = enc.forward(&xm);
        for i in 0..d {
            if !fp[i].is_finite() || !fm[i].is_finite() {
                return Err(Error::NonFiniteOutput { index: i });
            }
            data[i * n + j] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Matrix::new(d, n, data)
}

/// Directional derivative `J(x) v` for a unit direction `v`, via the analytic
/// Jacobian. Rejects non-unit directions instead of silently normalizing.
pub fn jacobian_row_directional(enc: &dyn Encoder, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(v.len(), enc.input_dim(), "direction length must match encoder");
    let n = norm(v);
    if (n - 1.0).abs() > tolerances::UNIT_NORM {
        return Err(Error::NotUnitLength {
            norm: n,
            tol: tolerances::UNIT_NORM,
        });
    }
    Ok(enc.jacobian(x).mul_vec(v))
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Closed set of encoder kinds, so whole encoders round-trip through CSV
/// bundles and configs without trait-object gymnastics.
#[derive(Debug, Clone)]
pub enum AnyEncoder {
    Linear(LinearEncoder),
    TanhMlp(TanhMlpEncoder),
    Rff(RffEncoder),
    PhaseRff(PhaseRffEncoder),
}

impl Encoder for AnyEncoder {
    fn input_dim(&self) -> usize {
        self.as_dyn().input_dim()
    }

    fn output_dim(&self) -> usize {
        self.as_dyn().output_dim()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.as_dyn().forward(x)
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        self.as_dyn().jacobian(x)
    }
}

impl AnyEncoder {
    pub fn as_dyn(&self) -> &dyn Encoder {
        match self {
            AnyEncoder::Linear(e) => e,
            AnyEncoder::TanhMlp(e) => e,
            AnyEncoder::Rff(e) => e,
            AnyEncoder::PhaseRff(e) => e,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AnyEncoder::Linear(_) => "linear",
            AnyEncoder::TanhMlp(_) => "tanh-mlp",
            AnyEncoder::Rff(_) => "rff",
            AnyEncoder::PhaseRff(_) => "phase-rff",
        }
    }

    /// CSV bundle: a `kind` line, a shape header line, then weight blocks in a
    /// fixed order. Floats carry 17 significant digits, so round-trips are
    /// bit-exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            AnyEncoder::Linear(e) => {
                out.push_str("kind,linear\n");
                out.push_str(&format!("shape,{},{}\n", e.a.rows(), e.a.cols()));
                out.push_str(&e.a.to_csv());
            }
            AnyEncoder::TanhMlp(e) => {
                out.push_str("kind,tanh-mlp\n");
                out.push_str(&format!(
                    "shape,{},{},{}\n",
                    e.w1.cols(),
                    e.w1.rows(),
                    e.w2.rows()
                ));
                out.push_str(&e.w1.to_csv());
                out.push_str(&vec_csv(&e.b1));
                out.push_str(&e.w2.to_csv());
                out.push_str(&vec_csv(&e.b2));
            }
            AnyEncoder::Rff(e) => {
                out.push_str("kind,rff\n");
                out.push_str(&format!(
                    "shape,{},{}\n",
                    e.omega.cols(),
                    2 * e.omega.rows()
                ));
                out.push_str(&format!("gamma,{}\n", format_float(e.gamma)));
                out.push_str(&e.omega.to_csv());
            }
            AnyEncoder::PhaseRff(e) => {
                out.push_str("kind,phase-rff\n");
                out.push_str(&format!("shape,{},{}\n", e.omega.cols(), e.omega.rows()));
                out.push_str(&format!("gamma,{}\n", format_float(e.gamma)));
                out.push_str(&e.omega.to_csv());
                out.push_str(&vec_csv(&e.phases));
            }
        }
        out
    }

    /// Parses the bundle format written by [`AnyEncoder::to_csv`].
    pub fn from_csv(text: &str) -> Result<AnyEncoder> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let parse_err = |what: &str| Error::Parse {
            path: "encoder bundle".to_string(),
            what: what.to_string(),
        };
        let mut cursor = 0usize;
        let next_line = |cursor: &mut usize| -> Result<&str> {
            let line = lines.get(*cursor).ok_or_else(|| parse_err("truncated bundle"))?;
            *cursor += 1;
            Ok(line)
        };
        let kind = next_line(&mut cursor)?
            .strip_prefix("kind,")
            .ok_or_else(|| parse_err("first line must be `kind,<name>`"))?
            .to_string();
        let dims: Vec<usize> = next_line(&mut cursor)?
            .strip_prefix("shape,")
            .ok_or_else(|| parse_err("second line must be `shape,...`"))?
            .split(',')
            .map(|f| f.trim().parse().map_err(|_| parse_err("bad shape field")))
            .collect::<Result<_>>()?;

        let read_block = |cursor: &mut usize, rows: usize| -> Result<Vec<Vec<f64>>> {
            (0..rows)
                .map(|_| {
                    next_line(cursor)?
                        .split(',')
                        .map(|f| {
                            f.trim()
                                .parse::<f64>()
                                .map_err(|_| parse_err("bad float in weight block"))
                        })
                        .collect()
                })
                .collect()
        };
        let to_matrix = |rows: Vec<Vec<f64>>| -> Result<Matrix> {
            let r = rows.len();
            let c = rows.first().map_or(0, Vec::len);
            Matrix::new(r, c, rows.into_iter().flatten().collect())
        };

        match kind.as_str() {
            "linear" => {
                let [rows, _cols] = dims[..] else {
                    return Err(parse_err("linear shape needs 2 fields"));
                };
                let a = to_matrix(read_block(&mut cursor, rows)?)?;
                Ok(AnyEncoder::Linear(LinearEncoder::new(a)))
            }
            "tanh-mlp" => {
                let [_n, h, d] = dims[..] else {
                    return Err(parse_err("tanh-mlp shape needs 3 fields"));
                };
                let w1 = to_matrix(read_block(&mut cursor, h)?)?;
                let b1 = read_block(&mut cursor, 1)?.remove(0);
                let w2 = to_matrix(read_block(&mut cursor, d)?)?;
                let b2 = read_block(&mut cursor, 1)?.remove(0);
                Ok(AnyEncoder::TanhMlp(TanhMlpEncoder::from_parts(w1, b1, w2, b2)?))
            }
            "rff" | "phase-rff" => {
                let [_n, d] = dims[..] else {
                    return Err(parse_err("rff shape needs 2 fields"));
                };
                let gamma: f64 = next_line(&mut cursor)?
                    .strip_prefix("gamma,")
                    .ok_or_else(|| parse_err("expected `gamma,<v>`"))?
                    .trim()
                    .parse()
                    .map_err(|_| parse_err("bad gamma"))?;
                if kind == "rff" {
                    let omega = to_matrix(read_block(&mut cursor, d / 2)?)?;
                    Ok(AnyEncoder::Rff(RffEncoder::from_raw(omega, gamma)))
                } else {
                    let omega = to_matrix(read_block(&mut cursor, d)?)?;
                    let phases = read_block(&mut cursor, 1)?.remove(0);
                    Ok(AnyEncoder::PhaseRff(PhaseRffEncoder::from_raw(omega, phases, gamma)))
                }
            }
            other => Err(parse_err(&format!("unknown encoder kind {other:?}"))),
        }
    }
}

fn vec_csv(v: &[f64]) -> String {
    let fields: Vec<String> = v.iter().map(|x| format_float(*x)).collect();
    format!("{}\n", fields.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_constructors_are_overcomplete_or_reject() {
        assert!(TanhMlpEncoder::new(4, 8, 4, 0).is_err());
        assert!(RffEncoder::new(4, 4, 1.0, 0).is_err());
        assert!(PhaseRffEncoder::new(4, 3, 1.0, 0).is_err());
        assert!(TanhMlpEncoder::new(4, 8, 16, 0).is_ok());
    }

    #[test]
    fn rff_rejects_odd_output_dim() {
        assert!(matches!(
            RffEncoder::new(3, 9, 1.0, 0),
            Err(Error::OddFeatureDim { dim: 9 })
        ));
    }

    #[test]
    fn rff_feature_norm_is_half_output_dim() {
        let enc = RffEncoder::new(3, 32, 1.3, 5).unwrap();
        for seed in 0..4_u64 {
            let x = crate::matrix::gaussian_vector(3, seed);
            let f = enc.forward(&x);
            let norm2: f64 = f.iter().map(|v| v * v).sum();
            assert!((norm2 - 16.0).abs() < 1e-9, "norm^2 {norm2} != 16");
        }
    }

    #[test]
    fn directional_rejects_non_unit_direction() {
        let enc = RffEncoder::new(2, 8, 1.0, 1).unwrap();
        let err = jacobian_row_directional(&enc, &[0.1, 0.2], &[0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::NotUnitLength { .. }));
    }

    #[test]
    fn directional_matches_full_jacobian() {
        let enc = TanhMlpEncoder::new(3, 6, 10, 2).unwrap();
        let x = [0.3, -0.4, 0.8];
        let inv = 1.0 / 3.0_f64.sqrt();
        let v = [inv, inv, inv];
        let jv = jacobian_row_directional(&enc, &x, &v).unwrap();
        let full = enc.jacobian(&x).mul_vec(&v);
        for (a, b) in jv.iter().zip(&full) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn fd_flags_nonfinite_output() {
        // Overflow on purpose: 1e308 * x leaves f64 range during probing.
        let a = Matrix::new(2, 1, vec![1e308, 1.0]).unwrap();
        let enc = LinearEncoder::new(a);
        let err = jacobian_fd(&enc, &[2.0], 1e-5).unwrap_err();
        assert!(matches!(err, Error::NonFiniteOutput { index: 0 }));
    }

    #[test]
    fn csv_bundles_round_trip_bit_exact() {
        let x = [0.7, -1.1, 0.4];
        let encoders = [
            AnyEncoder::Linear(LinearEncoder::new(
                crate::matrix::gaussian_matrix(6, 3, 9).unwrap(),
            )),
            AnyEncoder::TanhMlp(TanhMlpEncoder::new(3, 5, 8, 9).unwrap()),
            AnyEncoder::Rff(RffEncoder::new(3, 12, 0.8, 9).unwrap()),
            AnyEncoder::PhaseRff(PhaseRffEncoder::new(3, 10, 1.2, 9).unwrap()),
        ];
        for enc in &encoders {
            let text = enc.to_csv();
            let back = AnyEncoder::from_csv(&text).unwrap();
            assert_eq!(back.kind_name(), enc.kind_name());
            let fa = enc.forward(&x);
            let fb = back.forward(&x);
            assert_eq!(fa, fb, "{} forward changed after round trip", enc.kind_name());
        }
    }
}
