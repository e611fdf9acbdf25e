use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{expect_shape, parse_versioned, read_text, write_json, MatrixBlock};
use crate::error::{Error, Result};
use crate::numerics::spectral_abscissa as abscissa;
use crate::plant3dof::{FullOrderModel, PolynomialNonlinearity};
use crate::sim::Plant;

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;
const KIND: &str = "plant";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantMetadata {
    pub name: String,
    /// Free-form description of the unit system, e.g. `"b = U = m = 1"`.
    pub units: String,
    /// Hash of whatever the plant was generated from, when known.
    #[serde(default)]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Dimensions {
    states: usize,
    controls: usize,
    gusts: usize,
    outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    schema_version: u32,
    kind: String,
    metadata: PlantMetadata,
    dimensions: Dimensions,
    a: MatrixBlock,
    b_c: MatrixBlock,
    b_g: MatrixBlock,
    c_out: MatrixBlock,
    output_labels: Vec<String>,
    output_is_angle: Vec<bool>,
    #[serde(default)]
    nonlinearity: Option<PolynomialNonlinearity>,
    stable: bool,
}

/// A state-space plant supplied from outside the aerofoil generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalPlantBundle {
    pub metadata: PlantMetadata,
    pub a: DMatrix<f64>,
    pub b_c: DMatrix<f64>,
    pub b_g: DMatrix<f64>,
    pub c_out: DMatrix<f64>,
    pub output_labels: Vec<String>,
    pub output_is_angle: Vec<bool>,
    /// Polynomial acting directly on the state.
    pub nonlinearity: Option<PolynomialNonlinearity>,
    /// Declared Hurwitz flag, checked against the spectrum on load.
    pub stable: bool,
    /// Largest eigenvalue real part found by the load-time check.
    pub spectral_abscissa: f64,
}

impl ExternalPlantBundle {
    /// Builds and validates a bundle; the stability flag is derived from `A`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        metadata: PlantMetadata,
        a: DMatrix<f64>,
        b_c: DMatrix<f64>,
        b_g: DMatrix<f64>,
        c_out: DMatrix<f64>,
        output_labels: Vec<String>,
        output_is_angle: Vec<bool>,
        nonlinearity: Option<PolynomialNonlinearity>,
    ) -> Result<Self> {
        let alpha = abscissa(&a);
        let b = Self {
            metadata,
            a,
            b_c,
            b_g,
            c_out,
            output_labels,
            output_is_angle,
            nonlinearity,
            stable: alpha < 0.0,
            spectral_abscissa: alpha,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn from_fom(fom: &FullOrderModel, metadata: PlantMetadata) -> Result<Self> {
        Self::new(
            metadata,
            fom.a.clone(),
            fom.b_c.clone(),
            fom.b_g.clone(),
            fom.c_out.clone(),
            fom.output_labels.clone(),
            fom.output_is_angle.clone(),
            (!fom.nonlinearity.is_zero()).then(|| fom.nonlinearity.clone()),
        )
    }

    fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        expect_shape("a", &self.a, n, n)?;
        expect_shape("b_c", &self.b_c, n, self.b_c.ncols())?;
        expect_shape("b_g", &self.b_g, n, self.b_g.ncols())?;
        expect_shape("c_out", &self.c_out, self.c_out.nrows(), n)?;
        let p = self.c_out.nrows();
        if self.output_labels.len() != p {
            return Err(Error::schema("output_labels", format!("{} labels for {p} outputs", self.output_labels.len())));
        }
        if self.output_is_angle.len() != p {
            return Err(Error::schema("output_is_angle", format!("{} flags for {p} outputs", self.output_is_angle.len())));
        }
        if let Some(f) = &self.nonlinearity {
            if f.dim != n {
                return Err(Error::schema("nonlinearity.dim", format!("expected {n}, got {}", f.dim)));
            }
            f.validate()?;
        }
        Ok(())
    }

    fn to_file(&self) -> BundleFile {
        BundleFile {
            schema_version: BUNDLE_SCHEMA_VERSION,
            kind: KIND.into(),
            metadata: self.metadata.clone(),
            dimensions: Dimensions {
                states: self.a.nrows(),
                controls: self.b_c.ncols(),
                gusts: self.b_g.ncols(),
                outputs: self.c_out.nrows(),
            },
            a: MatrixBlock::from_matrix(&self.a),
            b_c: MatrixBlock::from_matrix(&self.b_c),
            b_g: MatrixBlock::from_matrix(&self.b_g),
            c_out: MatrixBlock::from_matrix(&self.c_out),
            output_labels: self.output_labels.clone(),
            output_is_angle: self.output_is_angle.clone(),
            nonlinearity: self.nonlinearity.clone(),
            stable: self.stable,
        }
    }

    fn from_file(f: BundleFile) -> Result<Self> {
        let d = &f.dimensions;
        let a = f.a.to_matrix("a")?;
        let b_c = f.b_c.to_matrix("b_c")?;
        let b_g = f.b_g.to_matrix("b_g")?;
        let c_out = f.c_out.to_matrix("c_out")?;
        expect_shape("a", &a, d.states, d.states)?;
        expect_shape("b_c", &b_c, d.states, d.controls)?;
        expect_shape("b_g", &b_g, d.states, d.gusts)?;
        expect_shape("c_out", &c_out, d.outputs, d.states)?;
        let alpha = abscissa(&a);
        if f.stable != (alpha < 0.0) {
            return Err(Error::schema(
                "stable",
                format!("declared {} but the largest eigenvalue real part is {alpha:e}", f.stable),
            ));
        }
        let b = Self {
            metadata: f.metadata,
            a,
            b_c,
            b_g,
            c_out,
            output_labels: f.output_labels,
            output_is_angle: f.output_is_angle,
            nonlinearity: f.nonlinearity,
            stable: f.stable,
            spectral_abscissa: alpha,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(parse_versioned(text, KIND, BUNDLE_SCHEMA_VERSION)?)
    }
}

pub fn load_plant(path: impl AsRef<Path>) -> Result<ExternalPlantBundle> {
    let path = path.as_ref();
    let b = ExternalPlantBundle::from_json(&read_text(path)?)?;
    log::info!(
        "loaded plant `{}` from {} ({} states, spectral abscissa {:.4e})",
        b.metadata.name,
        path.display(),
        b.a.nrows(),
        b.spectral_abscissa
    );
    Ok(b)
}

pub fn save_plant(bundle: &ExternalPlantBundle, path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), &bundle.to_file())
}

impl Plant for ExternalPlantBundle {
    fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    fn b_c(&self) -> &DMatrix<f64> {
        &self.b_c
    }
    fn b_g(&self) -> &DMatrix<f64> {
        &self.b_g
    }
    fn c_out(&self) -> &DMatrix<f64> {
        &self.c_out
    }
    fn add_nonlinear(&self, x: &[f64], out: &mut [f64]) {
        if let Some(f) = &self.nonlinearity {
            f.eval_into(x, out);
        }
    }
    fn output_labels(&self) -> &[String] {
        &self.output_labels
    }
    fn output_is_angle(&self) -> &[bool] {
        &self.output_is_angle
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gusts::GustSignal;
    use crate::plant3dof::{assemble_fom, AerofoilParams, Monomial};
    use crate::sim::{integrate_open_loop, SimulationConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn meta() -> PlantMetadata {
        PlantMetadata {
            name: "test".into(),
            units: "b = U = m = 1".into(),
            provenance: Some("abc".into()),
        }
    }

    fn random_bundle(seed: u64, n: usize) -> ExternalPlantBundle {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let shift = abscissa(&a) + 0.5;
        for i in 0..n {
            a[(i, i)] -= shift;
        }
        let nl = PolynomialNonlinearity {
            dim: n,
            quadratic: vec![],
            cubic: vec![Monomial { row: 0, coeff: -rng.random::<f64>(), factors: vec![0, 0, 0] }],
        };
        ExternalPlantBundle::new(
            meta(),
            a,
            DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0)),
            DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0)),
            DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0)),
            vec!["y0".into(), "y1".into()],
            vec![false, true],
            Some(nl),
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn save_load_is_bitwise_identity(seed in any::<u64>(), n in 1usize..9) {
            let b = random_bundle(seed, n);
            let text = b.to_json();
            let back = ExternalPlantBundle::from_json(&text).unwrap();
            prop_assert_eq!(back.to_json(), text);
            for (x, y) in b.a.iter().zip(back.a.iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            prop_assert_eq!(back, b);
        }
    }

    #[test]
    fn gust_column_count_mismatch_names_the_field() {
        let b = random_bundle(1, 3);
        let mut v: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        v["dimensions"]["gusts"] = 1.into();
        match ExternalPlantBundle::from_json(&v.to_string()) {
            Err(Error::Schema { path, message }) => {
                assert_eq!(path, "b_g");
                assert!(message.contains("3x1"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_stability_flag_is_rejected() {
        let b = random_bundle(2, 4);
        let mut v: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        v["stable"] = false.into();
        assert!(matches!(ExternalPlantBundle::from_json(&v.to_string()), Err(Error::Schema { path, .. }) if path == "stable"));
    }

    #[test]
    fn null_entry_reports_its_path() {
        let b = random_bundle(3, 2);
        let mut v: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        v["c_out"]["data"][2] = serde_json::Value::Null;
        match ExternalPlantBundle::from_json(&v.to_string()) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "c_out.data[2]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exported_fom_gives_identical_gust_response() {
        let fom = assemble_fom(&AerofoilParams::default_section()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fom.json");
        save_plant(&ExternalPlantBundle::from_fom(&fom, meta()).unwrap(), &path).unwrap();
        let back = load_plant(&path).unwrap();
        assert!(back.stable);
        let cfg = SimulationConfig {
            dt: 0.02,
            duration: 200.0,
            nonlinear: true,
            ..Default::default()
        };
        let g = GustSignal::one_cosine(0.14, 55.0, 1.0).unwrap();
        let a = integrate_open_loop(&fom, &g, None, &cfg).unwrap();
        let b = integrate_open_loop(&back, &g, None, &cfg).unwrap();
        assert_eq!(a.outputs, b.outputs);
    }
}
