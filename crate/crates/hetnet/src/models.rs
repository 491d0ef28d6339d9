//! The ODE family hosting robust heteroclinic cycles and networks.
//!
//! Every model in this crate has the form
//!
//! ```text
//!     dx_j/dt = x_j * (1 - chi + sum_k a[k][j] * s_k),    j = 1..n
//! ```
//!
//! where `s_k = x_k^2` and `chi = sum x_k^2` for the equivariant-cubic
//! representation, or `s_k = x_k` and `chi = sum x_k` for the
//! Lotka-Volterra representation. The coefficient `a[k][j]` multiplies the
//! k-th squared coordinate in equation j, and the diagonal is identically
//! zero. Each coordinate axis carries an equilibrium with unit coordinate;
//! `a[j][k]` is the Jacobian eigenvalue at that equilibrium in the
//! transverse direction `k`, and the radial eigenvalue is -2 (cubic form).

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Which representation the coefficient matrix is interpreted under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    /// Cubic vector field, equivariant under every reflection `x_j -> -x_j`.
    EquivariantCubic,
    /// Lotka-Volterra form, obtained from the cubic form by `y_j = x_j^2`
    /// plus a rescaling of time by a factor of 2.
    LotkaVolterra,
}

/// Identifies an axis equilibrium: unit coordinate on `axis`, sign
/// negative only in the unrestricted cubic phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EquilibriumId {
    pub axis: usize,
    pub negative: bool,
}

impl EquilibriumId {
    pub fn positive(axis: usize) -> Self {
        EquilibriumId {
            axis,
            negative: false,
        }
    }

    pub fn coordinates(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        x[self.axis] = if self.negative { -1.0 } else { 1.0 };
        x
    }
}

impl fmt::Display for EquilibriumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-xi{}", self.axis + 1)
        } else {
            write!(f, "xi{}", self.axis + 1)
        }
    }
}

/// An axis equilibrium together with its coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub id: EquilibriumId,
    pub coordinates: Vec<f64>,
}

/// One Jacobian eigenvalue at an axis equilibrium.
///
/// `eigenvalue` is the raw value for the model as written. For
/// Lotka-Volterra models `cubic_equivalent` quotes the eigenvalue of the
/// parent cubic system (the radial value -1 corresponds to -2 there);
/// for cubic models the two fields coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionEigenvalue {
    pub direction: usize,
    pub radial: bool,
    pub eigenvalue: f64,
    pub cubic_equivalent: f64,
}

/// An immutable vector field of the family above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    n: usize,
    /// Row-major, `a[k*n + j]` multiplies the k-th squared coordinate in
    /// equation j.
    a: Vec<f64>,
    representation: Representation,
    orthant_restricted: bool,
}

/// Guckenheimer-Holmes parameters: contracting magnitudes `c_jk` and
/// expanding rates `e_jk`, all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhParams {
    pub c21: f64,
    pub c32: f64,
    pub c13: f64,
    pub e12: f64,
    pub e23: f64,
    pub e31: f64,
}

/// Kirk-Silber parameters. `t43` couples `x4` into equation 3 and `t34`
/// couples `x3` into equation 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsParams {
    pub e12: f64,
    pub c13: f64,
    pub c14: f64,
    pub c21: f64,
    pub e23: f64,
    pub e24: f64,
    pub e31: f64,
    pub c32: f64,
    pub t43: f64,
    pub e41: f64,
    pub c42: f64,
    pub t34: f64,
}

/// Rock-Paper-Scissors-Spock-Lizard parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpsslParams {
    pub c_a: f64,
    pub e_a: f64,
    pub c_b: f64,
    pub e_b: f64,
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

impl GhParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("c21", self.c21)?;
        require_positive("c32", self.c32)?;
        require_positive("c13", self.c13)?;
        require_positive("e12", self.e12)?;
        require_positive("e23", self.e23)?;
        require_positive("e31", self.e31)
    }
}

impl KsParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("e12", self.e12)?;
        require_positive("c13", self.c13)?;
        require_positive("c14", self.c14)?;
        require_positive("c21", self.c21)?;
        require_positive("e23", self.e23)?;
        require_positive("e24", self.e24)?;
        require_positive("e31", self.e31)?;
        require_positive("c32", self.c32)?;
        require_positive("t43", self.t43)?;
        require_positive("e41", self.e41)?;
        require_positive("c42", self.c42)?;
        require_positive("t34", self.t34)
    }
}

impl RpsslParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("c_a", self.c_a)?;
        require_positive("e_a", self.e_a)?;
        require_positive("c_b", self.c_b)?;
        require_positive("e_b", self.e_b)
    }
}

/// Build a model from an explicit coefficient matrix. `a[k][j]` multiplies
/// the k-th squared coordinate in equation j; the diagonal must be zero.
pub fn make_generic_model(
    n: usize,
    a: &[Vec<f64>],
    representation: Representation,
    orthant_restricted: bool,
) -> Result<NetworkModel> {
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    if a.len() != n {
        return Err(Error::NonSquareMatrix {
            n,
            row: a.len(),
            len: 0,
        });
    }
    for (k, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NonSquareMatrix {
                n,
                row: k,
                len: row.len(),
            });
        }
    }
    for (k, row) in a.iter().enumerate() {
        if row[k] != 0.0 {
            return Err(Error::DiagonalNonzero {
                index: k,
                value: row[k],
            });
        }
    }
    if representation == Representation::LotkaVolterra && !orthant_restricted {
        return Err(Error::UnrestrictedLotkaVolterra);
    }
    let mut flat = Vec::with_capacity(n * n);
    for row in a {
        flat.extend_from_slice(row);
    }
    Ok(NetworkModel {
        n,
        a: flat,
        representation,
        orthant_restricted,
    })
}

/// Three-dimensional Guckenheimer-Holmes system. Equation 1 couples
/// `-c21 x2^2 + e31 x3^2`, and cyclically for the others.
pub fn make_gh_model(p: &GhParams) -> Result<NetworkModel> {
    p.validate()?;
    let mut a = vec![vec![0.0; 3]; 3];
    a[1][0] = -p.c21;
    a[2][0] = p.e31;
    a[0][1] = p.e12;
    a[2][1] = -p.c32;
    a[0][2] = -p.c13;
    a[1][2] = p.e23;
    make_generic_model(3, &a, Representation::EquivariantCubic, true)
}

/// Four-dimensional Kirk-Silber system: two three-cycles sharing the
/// 1 -> 2 connection, with `t43`/`t34` coupling the third and fourth
/// coordinates to each other.
pub fn make_ks_model(p: &KsParams) -> Result<NetworkModel> {
    p.validate()?;
    let mut a = vec![vec![0.0; 4]; 4];
    a[1][0] = -p.c21;
    a[2][0] = p.e31;
    a[3][0] = p.e41;
    a[0][1] = p.e12;
    a[2][1] = -p.c32;
    a[3][1] = -p.c42;
    a[0][2] = -p.c13;
    a[1][2] = p.e23;
    a[3][2] = -p.t43;
    a[0][3] = -p.c14;
    a[1][3] = p.e24;
    a[2][3] = -p.t34;
    make_generic_model(4, &a, Representation::EquivariantCubic, true)
}

/// Five-dimensional Rock-Paper-Scissors-Spock-Lizard system. Equation j
/// couples `-cA x_{j+1}^2 + eB x_{j+2}^2 - cB x_{j+3}^2 + eA x_{j+4}^2`
/// with indices mod 5, so the coefficient matrix is circulant.
pub fn make_rpssl_model(p: &RpsslParams) -> Result<NetworkModel> {
    p.validate()?;
    let mut a = vec![vec![0.0; 5]; 5];
    for j in 0..5 {
        a[(j + 1) % 5][j] = -p.c_a;
        a[(j + 2) % 5][j] = p.e_b;
        a[(j + 3) % 5][j] = -p.c_b;
        a[(j + 4) % 5][j] = p.e_a;
    }
    make_generic_model(5, &a, Representation::EquivariantCubic, true)
}

impl NetworkModel {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn orthant_restricted(&self) -> bool {
        self.orthant_restricted
    }

    /// Coefficient of the k-th squared coordinate in equation j.
    pub fn coefficient(&self, k: usize, j: usize) -> f64 {
        self.a[k * self.n + j]
    }

    /// Same model on the full space `R^n` instead of the nonnegative
    /// orthant. Only meaningful for the equivariant-cubic representation.
    pub fn unrestricted(&self) -> Result<NetworkModel> {
        if self.representation == Representation::LotkaVolterra {
            return Err(Error::UnrestrictedLotkaVolterra);
        }
        let mut m = self.clone();
        m.orthant_restricted = false;
        Ok(m)
    }

    /// Checks that `x` lies in the model's phase space.
    pub fn admissible(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::WrongDimension {
                expected: self.n,
                found: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InadmissibleInitialCondition(format!(
                    "x[{i}] = {v} is not finite"
                )));
            }
            if self.orthant_restricted && v < 0.0 {
                return Err(Error::NegativeCoordinate { index: i, value: v });
            }
        }
        Ok(())
    }

    /// The vector field at `x`.
    pub fn vector_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.admissible(x)?;
        let mut out = vec![0.0; self.n];
        self.fill_vector_field(x, &mut out);
        Ok(out)
    }

    /// Unchecked vector field evaluation into a caller buffer.
    pub fn fill_vector_field(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut growth = vec![0.0; n];
        self.fill_growth_rates(x, &mut growth);
        for j in 0..n {
            out[j] = x[j] * growth[j];
        }
    }

    /// Per-coordinate logarithmic growth rates `g_j` so that
    /// `dx_j/dt = x_j * g_j(x)`. Writing the field this way keeps
    /// coordinate hyperplanes exactly invariant in every consumer.
    pub fn fill_growth_rates(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut chi = 0.0;
        // s_k = x_k^2 (cubic) or x_k (LV); reuse `out` as scratch for s.
        match self.representation {
            Representation::EquivariantCubic => {
                for k in 0..n {
                    let s = x[k] * x[k];
                    out[k] = s;
                    chi += s;
                }
            }
            Representation::LotkaVolterra => {
                for k in 0..n {
                    out[k] = x[k];
                    chi += x[k];
                }
            }
        }
        let mut g = [0.0f64; 16];
        let g = &mut g[..n];
        for gj in g.iter_mut() {
            *gj = 1.0 - chi;
        }
        for k in 0..n {
            let s = out[k];
            if s != 0.0 {
                let row = &self.a[k * n..(k + 1) * n];
                for j in 0..n {
                    g[j] += row[j] * s;
                }
            }
        }
        out.copy_from_slice(g);
    }

    /// Sum of squared coordinates (cubic) or of coordinates (LV).
    pub fn chi(&self, x: &[f64]) -> f64 {
        match self.representation {
            Representation::EquivariantCubic => x.iter().map(|v| v * v).sum(),
            Representation::LotkaVolterra => x.iter().sum(),
        }
    }

    /// The Lotka-Volterra image of a cubic model: same coefficients, with
    /// the solution correspondence `y(2t) = x(t)^2` componentwise.
    pub fn to_lotka_volterra(&self) -> Result<NetworkModel> {
        if self.representation == Representation::LotkaVolterra {
            return Err(Error::AlreadyLotkaVolterra);
        }
        Ok(NetworkModel {
            n: self.n,
            a: self.a.clone(),
            representation: Representation::LotkaVolterra,
            orthant_restricted: true,
        })
    }

    /// All axis equilibria: n positive points when restricted to the
    /// orthant (or in LV form), the 2n signed points otherwise.
    pub fn equilibria(&self) -> Vec<Equilibrium> {
        let mut out = Vec::new();
        for axis in 0..self.n {
            let id = EquilibriumId::positive(axis);
            out.push(Equilibrium {
                coordinates: id.coordinates(self.n),
                id,
            });
        }
        if !self.orthant_restricted && self.representation == Representation::EquivariantCubic {
            for axis in 0..self.n {
                let id = EquilibriumId {
                    axis,
                    negative: true,
                };
                out.push(Equilibrium {
                    coordinates: id.coordinates(self.n),
                    id,
                });
            }
        }
        out
    }

    /// Jacobian eigenvalues at the axis equilibrium on `axis` (0-based).
    ///
    /// The transverse eigenvalue in direction k is the coefficient of the
    /// axis coordinate in equation k, i.e. `a[axis][k]`; the radial
    /// eigenvalue is -2 for cubic models and -1 for LV models.
    pub fn jacobian_eigenvalues_at(&self, axis: usize) -> Result<Vec<DirectionEigenvalue>> {
        if axis >= self.n {
            return Err(Error::IndexOutOfRange {
                index: axis,
                n: self.n,
            });
        }
        let lv = self.representation == Representation::LotkaVolterra;
        let mut out = Vec::with_capacity(self.n);
        for k in 0..self.n {
            if k == axis {
                let raw = if lv { -1.0 } else { -2.0 };
                out.push(DirectionEigenvalue {
                    direction: k,
                    radial: true,
                    eigenvalue: raw,
                    cubic_equivalent: -2.0,
                });
            } else {
                let v = self.coefficient(axis, k);
                out.push(DirectionEigenvalue {
                    direction: k,
                    radial: false,
                    eigenvalue: v,
                    cubic_equivalent: v,
                });
            }
        }
        Ok(out)
    }
}
