//! Catalog of worked coordinate systems with reference data.
//!
//! Each entry bundles a [`SystemDefinition`] with the ancillary data the
//! checkers and solvers consume: the ambient potential, first-order frame
//! profiles, conjugation shifts, an ambient chart where one exists, a closed
//! form solution where one is known, and the verdicts every applicable check
//! is expected to produce. Entries are loaded by name via [`load`] or, for
//! systems with free parameters, [`load_with`]. Three systems also expose
//! free-function hooks ([`canonical2d_with`], [`linear_family_with`],
//! [`euclid_wedge_with`]) for substituting whole profiles rather than
//! numbers.

use std::collections::BTreeMap;

use crate::error::{GalleryError, StackelError};
use crate::expr::Expr;
use crate::matrix::{GeneralizedStackelMatrix, OrthogonalMetric};
use crate::report::Verdict;
use crate::sample::{DomainBox, DEFAULT_MARGIN};
use crate::sysdef::{SystemDefinition, VectorPotentialData};

/// Embedding of a coordinate patch into a flat ambient space.
///
/// `components` give the ambient coordinates as expressions in the system
/// coordinates; `signs` carry the ambient metric signature. When `conformal`
/// is set the pulled-back flat metric is multiplied by that factor before
/// comparison, which is how the hyperbolic half-space patch is certified.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    pub ambient: Vec<String>,
    pub components: Vec<Expr>,
    pub signs: Vec<f64>,
    pub conformal: Option<Expr>,
}

impl CoordinateMap {
    fn flat(ambient: &[&str], components: Vec<Expr>) -> Self {
        CoordinateMap {
            ambient: ambient.iter().map(|s| s.to_string()).collect(),
            components,
            signs: vec![1.0; ambient.len()],
            conformal: None,
        }
    }

    /// Largest scaled deviation between the pulled-back ambient metric and
    /// the diagonal metric `diag(H_j^2)` over `samples` points.
    ///
    /// The pullback is `G_jk = c * sum_m s_m (d comp_m / d x^j)(d comp_m / d x^k)`
    /// and the target is `1/H_j^-2` on the diagonal, zero off it.
    pub fn pullback_residual(
        &self,
        metric: &OrthogonalMetric,
        domain: &DomainBox,
        samples: usize,
        seed: u64,
    ) -> Result<f64, StackelError> {
        let n = metric.dim();
        let jac: Vec<Vec<Expr>> = self
            .components
            .iter()
            .map(|comp| metric.coords().iter().map(|x| comp.diff(x)).collect())
            .collect();
        let mut worst = 0.0f64;
        for p in domain.sample(samples, seed, DEFAULT_MARGIN) {
            let b = metric.binding(&p);
            let ev = |ex: &Expr| {
                ex.eval(&b).map_err(|source| StackelError::Eval {
                    point: p.clone(),
                    source,
                })
            };
            let conf = match &self.conformal {
                Some(cf) => ev(cf)?,
                None => 1.0,
            };
            for j in 0..n {
                for k in j..n {
                    let mut g = 0.0;
                    for (m, row) in jac.iter().enumerate() {
                        g += self.signs[m] * ev(&row[j])? * ev(&row[k])?;
                    }
                    g *= conf;
                    let target = if j == k { 1.0 / ev(metric.h_inv2(j))? } else { 0.0 };
                    let scale = 1.0 + target.abs().max(g.abs());
                    worst = worst.max((g - target).abs() / scale);
                }
            }
        }
        Ok(worst)
    }
}

/// A separated solution known in closed form.
///
/// `psi` is the bare separated product; `theta = e^R * psi` is the full
/// solution of the ambient equation at eigenvalue `energy`. For systems
/// without a separation factor the two coincide.
#[derive(Debug, Clone)]
pub struct ClosedFormSolution {
    pub psi: Expr,
    pub theta: Expr,
    pub energy: f64,
}

/// A catalog entry: the system definition plus everything the checks need.
///
/// Fields other than `def` are parameter-resolved; `def` keeps symbolic
/// parameters together with their values so it round-trips through the text
/// format unchanged.
#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub def: SystemDefinition,
    /// Potential entering the ambient equation, e.g. `alpha/r` for Kepler.
    pub ambient_potential: Expr,
    /// Single-variable first-order profiles of the separable frame operators.
    pub first_order: Vec<Expr>,
    /// Constants added to the frame potentials by conjugation with `e^R`.
    pub helmholtz_shift: Vec<f64>,
    pub chart: Option<CoordinateMap>,
    pub closed_form: Option<ClosedFormSolution>,
    /// Verdict each applicable check is expected to produce. Checks not
    /// listed here make no claim for this system.
    pub expected: BTreeMap<&'static str, Verdict>,
    pub description: &'static str,
}

impl GalleryEntry {
    pub fn matrix(&self) -> Result<GeneralizedStackelMatrix, StackelError> {
        self.def.matrix()
    }

    pub fn metric(&self) -> Result<OrthogonalMetric, StackelError> {
        self.def.matrix()?.metric_from(&self.def.domain_box())
    }

    /// Run one named check with this entry's frame profiles supplied.
    pub fn run_check(
        &self,
        mode: &str,
        settings: &crate::driver::CheckSettings,
    ) -> Result<crate::report::CheckReport, crate::error::CheckError> {
        crate::driver::run_check(&self.def, Some(&self.first_order), mode, settings)
    }
}

/// Names of all catalog systems, in presentation order.
pub fn list_systems() -> Vec<&'static str> {
    vec![
        "kepler_spherical",
        "hydrogen_spherical",
        "canonical2d",
        "solute2d",
        "minkowski3d",
        "dupin_cyclide",
        "euclid_wedge",
        "linear_family",
        "rotational_frames",
        "hyperbolic_halfspace",
        "polar_magnetic",
    ]
}

/// Load a catalog entry with default parameters.
pub fn load(name: &str) -> Result<GalleryEntry, GalleryError> {
    load_with(name, &[])
}

/// Load a catalog entry overriding named numeric parameters.
///
/// Unknown system names and unknown or out-of-range parameters are rejected.
pub fn load_with(name: &str, overrides: &[(&str, f64)]) -> Result<GalleryEntry, GalleryError> {
    let mut ov = Overrides::new(name, overrides);
    let entry = match name {
        "kepler_spherical" => kepler_spherical(ov.take("alpha", 1.0)?),
        "hydrogen_spherical" => hydrogen_spherical(ov.take("alpha", 1.0)?),
        "canonical2d" => {
            let mut entry = canonical2d_with(e("u + v"))?;
            entry.expected.insert("nogo2d", Verdict::Nonfactorizable);
            entry
        }
        "solute2d" => solute2d(),
        "minkowski3d" => minkowski3d(),
        "dupin_cyclide" => {
            let a = ov.take("a", 2.0)?;
            let c = ov.take("c", 1.0)?;
            dupin_cyclide(a, c)?
        }
        "euclid_wedge" => euclid_wedge_with(e("u^2"), e("v^2"), e("w^2"))?,
        "linear_family" => {
            let mut entry = linear_family_with(e("1"), e("0"), e("0"))?;
            entry.expected.insert("regular", Verdict::Pass);
            entry
        }
        "rotational_frames" => rotational_frames(),
        "hyperbolic_halfspace" => hyperbolic_halfspace(),
        "polar_magnetic" => {
            let gammas = [
                ov.take("gamma4", 1.0)?,
                ov.take("gamma5", 1.0)?,
                ov.take("gamma6", 1.0)?,
            ];
            polar_magnetic(gammas)
        }
        _ => {
            return Err(GalleryError::Unknown {
                name: name.to_string(),
            })
        }
    };
    ov.finish()?;
    Ok(entry)
}

struct Overrides<'a> {
    system: &'a str,
    map: BTreeMap<&'a str, f64>,
}

impl<'a> Overrides<'a> {
    fn new(system: &'a str, pairs: &[(&'a str, f64)]) -> Self {
        Overrides {
            system,
            map: pairs.iter().copied().collect(),
        }
    }

    fn take(&mut self, name: &str, default: f64) -> Result<f64, GalleryError> {
        match self.map.remove(name) {
            Some(v) if v.is_finite() => Ok(v),
            Some(v) => Err(GalleryError::InvalidParameter {
                name: name.to_string(),
                value: v,
                reason: "must be finite".to_string(),
            }),
            None => Ok(default),
        }
    }

    fn finish(self) -> Result<(), GalleryError> {
        match self.map.into_iter().next() {
            Some((name, _)) => Err(GalleryError::UnknownParameter {
                system: self.system.to_string(),
                name: name.to_string(),
            }),
            None => Ok(()),
        }
    }
}

fn e(src: &str) -> Expr {
    Expr::parse(src).expect("catalog expression parses")
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn dom(axes: &[(&str, f64, f64)]) -> Vec<(String, f64, f64)> {
    axes.iter().map(|(n, lo, hi)| (n.to_string(), *lo, *hi)).collect()
}

fn expected(pairs: &[(&'static str, Verdict)]) -> BTreeMap<&'static str, Verdict> {
    pairs.iter().copied().collect()
}

fn zeros(n: usize) -> Vec<Expr> {
    vec![Expr::num(0.0); n]
}

/// Reject a free-function profile that references symbols outside `allowed`.
fn check_profile(name: &str, profile: &Expr, allowed: &[&str]) -> Result<(), GalleryError> {
    for sym in profile.free_symbols() {
        if !allowed.contains(&&*sym) {
            return Err(GalleryError::InvalidProfile {
                name: name.to_string(),
                allowed: allowed.join(", "),
                offending: sym.to_string(),
            });
        }
    }
    Ok(())
}

fn spherical_chart() -> CoordinateMap {
    CoordinateMap::flat(
        &["x", "y", "z"],
        vec![
            e("r*sin(th)*cos(ph)"),
            e("r*sin(th)*sin(ph)"),
            e("r*cos(th)"),
        ],
    )
}

fn coulomb_rows() -> Vec<Vec<Expr>> {
    vec![
        vec![e("1"), e("-1/r^2"), e("0")],
        vec![e("0"), e("1"), e("-1/sin(th)^2")],
        vec![e("0"), e("0"), e("1")],
    ]
}

fn kepler_spherical(alpha: f64) -> GalleryEntry {
    let def = SystemDefinition {
        name: "kepler_spherical".to_string(),
        coords: strings(&["r", "th", "ph"]),
        sides: 1,
        rows: coulomb_rows(),
        potential: vec![e("alpha/r"), e("0"), e("0")],
        rfactor: None,
        domain: dom(&[("r", 0.8, 2.0), ("th", 0.4, 1.2), ("ph", 0.1, 1.5)]),
        vectorpot: None,
        params: [("alpha".to_string(), alpha)].into_iter().collect(),
    };
    GalleryEntry {
        def,
        ambient_potential: Expr::div(Expr::num(alpha), e("r")),
        first_order: vec![e("2/r"), e("cos(th)/sin(th)"), e("0")],
        helmholtz_shift: vec![0.0; 3],
        chart: Some(spherical_chart()),
        closed_form: None,
        expected: expected(&[
            ("regular", Verdict::Pass),
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Pass),
            ("commutators", Verdict::Pass),
        ]),
        description: "Coulomb Hamiltonian in spherical coordinates. Ordinary product \
            structure; the third constant is p_ph^2, so the side condition selects \
            meridian-plane motion and the system anchors the generalized machinery \
            to a classical benchmark.",
    }
}

fn hydrogen_spherical(alpha: f64) -> GalleryEntry {
    let def = SystemDefinition {
        name: "hydrogen_spherical".to_string(),
        coords: strings(&["r", "th", "ph"]),
        sides: 1,
        rows: coulomb_rows(),
        potential: vec![e("alpha/r"), e("1/4"), e("1/4")],
        rfactor: Some(e("-log(r) - log(sin(th))/2")),
        domain: dom(&[("r", 0.8, 2.0), ("th", 0.4, 1.2), ("ph", 0.1, 1.5)]),
        vectorpot: None,
        params: [("alpha".to_string(), alpha)].into_iter().collect(),
    };
    GalleryEntry {
        def,
        ambient_potential: Expr::div(Expr::num(alpha), e("r")),
        first_order: zeros(3),
        helmholtz_shift: vec![0.0; 3],
        chart: Some(spherical_chart()),
        closed_form: None,
        expected: expected(&[
            ("regular", Verdict::Pass),
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Obstructed),
            ("commutators", Verdict::Pass),
        ]),
        description: "Spherical Coulomb operator conjugated by e^R with \
            R = -log(r) - log(sin th)/2, which strips all first-order terms at the \
            cost of constant frame potentials 1/4. The side constant becomes \
            p_ph^2 + 1/4, whose real zero set is empty, so bracket sampling reports \
            an obstruction while the identity itself is certified by its multiplier \
            fit.",
    }
}

/// Two-dimensional normal form with a replaceable profile `f(u, v)`.
///
/// Rows are `[[1, 1], [1, f]]`, so `H_1^-2 = f/(f-1)`, `H_2^-2 = -1/(f-1)` and
/// the side condition is `p_v^2 = p_u^2`. The default profile is `f = u + v`.
pub fn canonical2d_with(f: Expr) -> Result<GalleryEntry, GalleryError> {
    check_profile("f", &f, &["u", "v"])?;
    let def = SystemDefinition {
        name: "canonical2d".to_string(),
        coords: strings(&["u", "v"]),
        sides: 1,
        rows: vec![vec![e("1"), e("1")], vec![e("1"), f]],
        potential: vec![e("0"), e("0")],
        rfactor: None,
        domain: dom(&[("u", 1.5, 2.5), ("v", 0.5, 0.9)]),
        vectorpot: None,
        params: BTreeMap::new(),
    };
    Ok(GalleryEntry {
        def,
        ambient_potential: Expr::num(0.0),
        first_order: zeros(2),
        helmholtz_shift: vec![0.0; 2],
        chart: None,
        closed_form: None,
        expected: expected(&[
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Pass),
            ("commutators", Verdict::Pass),
        ]),
        description: "Two-dimensional normal form [[1, 1], [1, f]] to which every \
            nondegenerate two-dimensional system with one side condition can be \
            rescaled. The side condition is p_v^2 = p_u^2; the profile f(u, v) is \
            replaceable and defaults to u + v, which is not a product of \
            single-variable factors.",
    })
}

fn solute_f() -> Expr {
    // Unary minus binds tighter than ^, so the power is grouped explicitly.
    e("-((u + v + sqrt((u + v)^2 - 4))^2)/4")
}

fn solute2d() -> GalleryEntry {
    let f = solute_f();
    let root = e("sqrt((u + v)^2 - 4)");
    let den = Expr::mul(Expr::sub(f.clone(), Expr::num(1.0)), root.clone());
    let drift = [
        Expr::div(f.clone(), den.clone()),
        Expr::div(Expr::num(1.0), den),
    ];
    let phi = e("(u + v + sqrt((u + v)^2 - 4))/2 - 2*atan((u + v + sqrt((u + v)^2 - 4))/2)");
    let chart = CoordinateMap::flat(
        &["x", "y"],
        vec![
            Expr::mul(e("u + v"), Expr::cos(Expr::sub(phi.clone(), e("u")))),
            Expr::mul(e("u + v"), Expr::sin(Expr::sub(phi, e("u")))),
        ],
    );
    let def = SystemDefinition {
        name: "solute2d".to_string(),
        coords: strings(&["u", "v"]),
        sides: 1,
        rows: vec![vec![e("1"), e("1")], vec![e("1"), f]],
        potential: vec![e("0"), e("0")],
        rfactor: None,
        domain: dom(&[("u", 1.2, 2.2), ("v", 1.1, 2.0)]),
        vectorpot: Some(VectorPotentialData {
            f: [Expr::num(0.0), Expr::num(0.0)],
            drift,
            w: [Expr::num(0.0), Expr::num(0.0)],
            gammas: [0.0; 3],
        }),
        params: BTreeMap::new(),
    };
    GalleryEntry {
        def,
        ambient_potential: Expr::num(0.0),
        first_order: zeros(2),
        helmholtz_shift: vec![0.0; 2],
        chart: Some(chart),
        closed_form: Some(ClosedFormSolution {
            psi: e("cos(u)*cos(v)"),
            theta: e("cos(u)*cos(v)"),
            energy: -1.0,
        }),
        expected: expected(&[
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Pass),
            ("commutators", Verdict::Pass),
            ("nogo2d", Verdict::Nonfactorizable),
            ("vectorpot", Verdict::Pass),
        ]),
        description: "Steady convection-diffusion on a plane patch written in the \
            two-dimensional normal form with f = -(u + v + sqrt((u+v)^2 - 4))^2/4. \
            The drift g has curl -2(u+v)/((u+v)^2-4)^(3/2) and squared speed \
            1/((u+v)^2 - 4); because the metric ratio does not factor, the plain \
            Helmholtz equation admits no R-separation here and only the convected \
            operator separates. Theta = cos(u) cos(v) solves it at E = -1.",
    }
}

fn minkowski3d() -> GalleryEntry {
    let q = "(u^2 - v^2)^2/(4*w^2)";
    let def = SystemDefinition {
        name: "minkowski3d".to_string(),
        coords: strings(&["u", "v", "w"]),
        sides: 1,
        rows: vec![
            vec![e("0"), e("1"), e(&format!("1 + {q}"))],
            vec![e("0"), e("-1"), e(&format!("-({q})"))],
            vec![e("1"), e("0"), e(q)],
        ],
        potential: vec![e("0"), e("0"), e("-1/w^2")],
        rfactor: Some(e("-log(w)")),
        domain: dom(&[("u", 1.5, 2.5), ("v", 0.2, 0.8), ("w", 0.5, 1.5)]),
        vectorpot: None,
        params: BTreeMap::new(),
    };
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    GalleryEntry {
        def,
        ambient_potential: e("-1/w^2"),
        first_order: zeros(3),
        helmholtz_shift: vec![0.0; 3],
        chart: None,
        closed_form: Some(ClosedFormSolution {
            psi: Expr::mul(
                e("cos(u)*cosh(v)"),
                Expr::pow(e("w"), Expr::num(golden)),
            ),
            theta: Expr::mul(
                e("cos(u)*cosh(v)"),
                Expr::pow(e("w"), Expr::num(golden - 1.0)),
            ),
            energy: 0.0,
        }),
        expected: expected(&[
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Pass),
            ("commutators", Verdict::Pass),
        ]),
        description: "Indefinite-signature system with H_u^-2 = H_v^-2 = -Q and \
            H_w^-2 = 1, Q = (u^2 - v^2)^2/(4 w^2), ambient potential -1/w^2 and \
            separation factor e^R = 1/w. The underlying metric is curved, so no \
            flat chart is attached. The side condition forces p_u = p_v = 0, and \
            cos(u) cosh(v) w^((sqrt(5)-1)/2) solves the conjugated equation at \
            E = 0.",
    }
}

fn dupin_cyclide(a: f64, c: f64) -> Result<GalleryEntry, GalleryError> {
    let reject = |name: &str, value: f64, reason: &str| {
        Err(GalleryError::InvalidParameter {
            name: name.to_string(),
            value,
            reason: reason.to_string(),
        })
    };
    if a <= 0.0 {
        return reject("a", a, "must be positive");
    }
    if c <= 0.0 {
        return reject("c", c, "must be positive");
    }
    if c >= a {
        return reject("c", c, "focal parameters need c < a");
    }
    // Domain health: both separation-factor brackets must stay positive on
    // the patch u in [0.3, 1.2], v in [0.5, 1.0], w in [1.1, 2.1].
    if a * (0.5f64).cosh() <= 2.1 {
        return reject("a", a, "a*cosh(0.5) must exceed 2.1 so a*cosh(v) - w stays positive");
    }
    if c * (0.3f64).cos() >= 1.1 {
        return reject("c", c, "c*cos(0.3) must stay below 1.1 so w - c*cos(u) stays positive");
    }

    let h1 = "(a*cosh(v) - c*cos(u))^2/((a^2 - c^2)*(a*cosh(v) - w)^2)";
    let h2 = "(a*cosh(v) - c*cos(u))^2/((a^2 - c^2)*(w - c*cos(u))^2)";
    let def = SystemDefinition {
        name: "dupin_cyclide".to_string(),
        coords: strings(&["u", "v", "w"]),
        sides: 2,
        rows: vec![
            vec![e("0"), e("1"), e("0")],
            vec![e("0"), e("0"), e("1")],
            vec![e("1"), e(&format!("-({h1})")), e(&format!("-({h2})"))],
        ],
        potential: vec![e("1/4"), e("-1/4"), e("0")],
        rfactor: Some(e("-log((w - c*cos(u))*(a*cosh(v) - w))/2")),
        domain: dom(&[("u", 0.3, 1.2), ("v", 0.5, 1.0), ("w", 1.1, 2.1)]),
        vectorpot: None,
        params: [("a".to_string(), a), ("c".to_string(), c)]
            .into_iter()
            .collect(),
    };
    let b2 = a * a - c * c;
    let b = b2.sqrt();
    let chart = CoordinateMap::flat(
        &["x", "y", "z"],
        vec![
            e(&format!(
                "({b2}*cos(u)*cosh(v) + ({c}*cosh(v) - {a}*cos(u))*w)/({a}*cosh(v) - {c}*cos(u))"
            )),
            e(&format!(
                "{b}*sin(u)*({a}*cosh(v) - w)/({a}*cosh(v) - {c}*cos(u))"
            )),
            e(&format!(
                "{b}*sinh(v)*(w - {c}*cos(u))/({a}*cosh(v) - {c}*cos(u))"
            )),
        ],
    );
    Ok(GalleryEntry {
        def,
        ambient_potential: Expr::num(0.0),
        first_order: zeros(3),
        helmholtz_shift: vec![0.0; 3],
        chart: Some(chart),
        closed_form: Some(ClosedFormSolution {
            psi: e("cos(u/2)*cosh(v/2)*exp(w)"),
            theta: e(&format!(
                "cos(u/2)*cosh(v/2)*exp(w)/sqrt((w - {c}*cos(u))*({a}*cosh(v) - w))"
            )),
            energy: 1.0,
        }),
        expected: expected(&[
            ("nonregular", Verdict::NotApplicable),
            ("brackets", Verdict::Obstructed),
            ("commutators", Verdict::Pass),
        ]),
        description: "Coordinates adapted to a Dupin cyclide in Euclidean space, \
            with focal parameters a > c > 0. Separation needs two side conditions \
            and the factor e^R = ((w - c cos u)(a cosh v - w))^(-1/2); the side \
            constants p_u^2 + 1/4 and p_v^2 - 1/4 admit no simultaneous real zero \
            on the patch, so bracket sampling reports an obstruction while the \
            multiplier identities still certify. cos(u/2) cosh(v/2) e^w solves the \
            conjugated equation at E = 1.",
    })
}

/// Wedge-type Euclidean coordinates with free potential profiles.
///
/// `ug`, `vg`, `wg` are single-variable profiles in `u`, `v`, `w`; the frame
/// potential row is `(ug/2, vg, wg)` and the ambient potential is
/// `ug/(v+w)^2 + vg + wg`. Defaults are `u^2`, `v^2`, `w^2`.
pub fn euclid_wedge_with(ug: Expr, vg: Expr, wg: Expr) -> Result<GalleryEntry, GalleryError> {
    check_profile("U", &ug, &["u"])?;
    check_profile("V", &vg, &["v"])?;
    check_profile("W", &wg, &["w"])?;
    let def = SystemDefinition {
        name: "euclid_wedge".to_string(),
        coords: strings(&["u", "v", "w"]),
        sides: 1,
        rows: vec![
            vec![e("0"), e("0"), e("1")],
            vec![e("0"), e("-1"), e("0")],
            vec![e("1"), e("1"), e("-2/(v + w)^2")],
        ],
        potential: vec![
            Expr::div(ug.clone(), Expr::num(2.0)),
            vg.clone(),
            wg.clone(),
        ],
        rfactor: Some(e("-log(v + w)/2")),
        domain: dom(&[("u", 0.2, 1.2), ("v", 0.8, 1.6), ("w", 0.3, 1.1)]),
        vectorpot: None,
        params: BTreeMap::new(),
    };
    let chart = CoordinateMap::flat(
        &["x", "y", "z"],
        vec![
            e("(v + w)*cos(u)/sqrt(2)"),
            e("(v + w)*sin(u)/sqrt(2)"),
            e("(v - w)/sqrt(2)"),
        ],
    );
    let ambient_potential = Expr::add(
        Expr::div(ug, e("(v + w)^2")),
        Expr::add(vg, wg),
    );
    Ok(GalleryEntry {
        def,
        ambient_potential,
        first_order: zeros(3),
        helmholtz_shift: vec![0.25, 0.0, 0.0],
        chart: Some(chart),
        closed_form: None,
        expected: expected(&[
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Obstructed),
            ("commutators", Verdict::Pass),
        ]),
        description: "Euclidean coordinates u, v, w with metric \
            diag((v+w)^2/2, 1, 1): a polar angle u in a rescaled plane crossed \
            with the diagonal directions v + w and v - w. Conjugation by \
            e^R = (v+w)^(-1/2) shifts the u-frame potential by 1/4. The potential \
            profiles U(u), V(v), W(w) are free; the defaults make the side \
            constant p_u^2 + U/2 with U = u^2 > 0, so no real admissible samples \
            exist and bracket sampling reports an obstruction.",
    })
}

/// Generalized family driven by one frame function `M = u1(u) w + u2(u) v + u3(u)`.
///
/// The profiles must depend on `u` alone. The default member `M = w`
/// degenerates to an ordinary product structure.
pub fn linear_family_with(u1: Expr, u2: Expr, u3: Expr) -> Result<GalleryEntry, GalleryError> {
    check_profile("u1", &u1, &["u"])?;
    check_profile("u2", &u2, &["u"])?;
    check_profile("u3", &u3, &["u"])?;
    let m = Expr::add(
        Expr::add(Expr::mul(u1, e("w")), Expr::mul(u2, e("v"))),
        u3,
    );
    Ok(linear_member(
        "linear_family",
        m,
        vec![e("u^2"), e("0"), e("0")],
        dom(&[("u", 0.2, 1.2), ("v", 0.3, 1.3), ("w", 0.5, 1.5)]),
        None,
        expected(&[
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Obstructed),
            ("commutators", Verdict::Pass),
        ]),
        "One-function family of generalized structures: the side column is -M^2 \
            with M = u1(u) w + u2(u) v + u3(u), and H^-2 = (1/M^2, 1, 1). The \
            default M = w is an ordinary product structure and also passes the \
            regular test; genuinely mixed choices of M fail it while the \
            nonregular conditions continue to hold. The potential u^2 makes the \
            side constant p_u^2 + u^2, which has no real zeros away from the \
            origin, so bracket sampling reports an obstruction.",
    ))
}

fn linear_member(
    name: &str,
    m: Expr,
    potential: Vec<Expr>,
    domain: Vec<(String, f64, f64)>,
    chart: Option<CoordinateMap>,
    expected: BTreeMap<&'static str, Verdict>,
    description: &'static str,
) -> GalleryEntry {
    let msq = Expr::powi(m.clone(), 2);
    let def = SystemDefinition {
        name: name.to_string(),
        coords: strings(&["u", "v", "w"]),
        sides: 1,
        rows: vec![
            vec![e("0"), e("0"), Expr::neg(msq.clone())],
            vec![e("1"), e("1"), e("1")],
            vec![e("0"), e("-1"), e("0")],
        ],
        potential: potential.clone(),
        rfactor: None,
        domain,
        vectorpot: None,
        params: BTreeMap::new(),
    };
    let ambient_potential = Expr::div(potential[0].clone(), msq);
    GalleryEntry {
        def,
        ambient_potential,
        first_order: zeros(3),
        helmholtz_shift: vec![0.0; 3],
        chart,
        closed_form: None,
        expected,
        description,
    }
}

fn rotational_frames() -> GalleryEntry {
    let u1 = e("cos(u)*(2 + sin(u)^2)/(1 + sin(u)^2)");
    let u2 = e("sqrt(1 + sin(u)^2)");
    let m = Expr::add(Expr::mul(u1, e("w")), Expr::mul(u2, e("v")));
    let chart = CoordinateMap::flat(
        &["x", "y", "z"],
        vec![
            e("sin(u)^2*v - (cos(u)^3/sqrt(1 + sin(u)^2))*w"),
            e("sin(u)*cos(u)*v + (sin(u)*(1 + cos(u)^2)/sqrt(1 + sin(u)^2))*w"),
            e("cos(u)*v - (sin(u)^2/sqrt(1 + sin(u)^2))*w"),
        ],
    );
    linear_member(
        "rotational_frames",
        m,
        vec![e("0"), e("0"), e("0")],
        dom(&[("u", 0.2, 1.0), ("v", 1.0, 2.0), ("w", 0.4, 1.2)]),
        Some(chart),
        expected(&[
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Pass),
            ("commutators", Verdict::Pass),
        ]),
        "Member of the linear family realized by a rotating orthonormal frame \
            along a spherical curve: the plane spanned by the frame vectors n(u), \
            m(u) is swept with coordinates v, w, giving a flat chart with \
            g_uu = M^2, M = u1(u) w + u2(u) v. It fails the regular conditions \
            but satisfies the nonregular ones, and with zero potential the side \
            condition p_u = 0 admits real samples, so the bracket identity is \
            exercised on-slice.",
    )
}

fn hyperbolic_halfspace() -> GalleryEntry {
    let def = SystemDefinition {
        name: "hyperbolic_halfspace".to_string(),
        coords: strings(&["u", "v", "w"]),
        sides: 1,
        rows: vec![
            vec![e("0"), e("0"), e("-((u + v)^2)")],
            vec![e("0"), e("-1"), e("1")],
            vec![e("1/w^2"), e("1"), e("0")],
        ],
        potential: vec![e("0"), e("0"), e("0")],
        rfactor: None,
        domain: dom(&[("u", 0.3, 1.1), ("v", 0.4, 1.2), ("w", 0.5, 1.5)]),
        vectorpot: None,
        params: BTreeMap::new(),
    };
    let chart = CoordinateMap {
        ambient: strings(&["x", "y", "z"]),
        components: vec![
            e("(u + v)*sin(u) + cos(u)"),
            e("-(u + v)*cos(u) + sin(u)"),
            e("w"),
        ],
        signs: vec![1.0; 3],
        conformal: Some(e("1/w^2")),
    };
    GalleryEntry {
        def,
        ambient_potential: Expr::num(0.0),
        first_order: zeros(3),
        helmholtz_shift: vec![0.0; 3],
        chart: Some(chart),
        closed_form: None,
        expected: expected(&[
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Pass),
            ("commutators", Verdict::Pass),
        ]),
        description: "Upper half-space model of hyperbolic 3-space in \
            involute-evolute coordinates: the horizontal plane carries the chart \
            x = (u+v) sin u + cos u, y = -(u+v) cos u + sin u, and the conformal \
            factor 1/z^2 turns the flat pullback into H^-2 = (w^2/(u+v)^2, w^2, \
            w^2). Nonregular with side condition p_u = 0.",
    }
}

fn polar_magnetic(gammas: [f64; 3]) -> GalleryEntry {
    let def = SystemDefinition {
        name: "polar_magnetic".to_string(),
        coords: strings(&["r", "th"]),
        sides: 1,
        rows: vec![vec![e("1"), e("1/r^2")], vec![e("0"), e("-1")]],
        potential: vec![e("r^2"), e("cos(th)")],
        rfactor: Some(e("-log(r)/2")),
        domain: dom(&[("r", 0.8, 2.0), ("th", 0.2, 1.4)]),
        vectorpot: Some(VectorPotentialData {
            f: [Expr::num(0.0), Expr::num(0.0)],
            drift: [Expr::num(0.0), Expr::num(0.0)],
            w: [Expr::num(0.0), Expr::num(0.0)],
            gammas,
        }),
        params: BTreeMap::new(),
    };
    let chart = CoordinateMap::flat(&["x", "y"], vec![e("r*cos(th)"), e("r*sin(th)")]);
    GalleryEntry {
        def,
        // Conjugation by e^R = r^(-1/2) contributes the -1/(4r^2) term.
        ambient_potential: e("r^2 + cos(th)/r^2 - 1/(4*r^2)"),
        first_order: zeros(2),
        helmholtz_shift: vec![0.0; 2],
        chart: Some(chart),
        closed_form: None,
        expected: expected(&[
            ("regular", Verdict::Pass),
            ("nonregular", Verdict::Pass),
            ("brackets", Verdict::Obstructed),
            ("commutators", Verdict::Pass),
            ("nogo2d", Verdict::Factorizable),
            ("vectorpot", Verdict::Pass),
        ]),
        description: "Flat polar coordinates carrying a first-order vector \
            potential determined by gauge constants gamma4..gamma6. The scalar \
            part recovers as Phi = v1 + v2/r^2 - 1/(4 r^2) after conjugation by \
            e^R = r^(-1/2). The metric ratio r^2 factors, the structure is an \
            ordinary product one, and the side constant p_th^2 + cos(th) has no \
            real zeros on the patch, so bracket sampling reports an obstruction.",
    }
}
