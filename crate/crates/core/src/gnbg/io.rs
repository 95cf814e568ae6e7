use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Component, InstanceError, ProblemInstance, TransformParams};
use crate::Bounds;

pub const FORMAT_VERSION: u32 = 1;

/// On-disk shape of an instance file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format_version: u32,
    pub dim: usize,
    pub lb: f64,
    pub ub: f64,
    pub instance_seed: u64,
    pub components: Vec<ComponentRecord>,
    pub optimum_value: f64,
    pub optimum_position: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentRecord {
    pub m: Vec<f64>,
    pub sigma: f64,
    pub widths: Vec<f64>,
    #[serde(rename = "R")]
    pub rotation: Vec<Vec<f64>>,
    pub lambda: f64,
    pub mu_pos: f64,
    pub mu_neg: f64,
    pub omega: [f64; 4],
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(inst: &ProblemInstance) -> Self {
        let bounds = inst.bounds();
        Self {
            format_version: FORMAT_VERSION,
            dim: inst.dim(),
            lb: bounds.lb,
            ub: bounds.ub,
            instance_seed: inst.instance_seed(),
            components: inst
                .components()
                .iter()
                .map(|c| ComponentRecord {
                    m: c.m().to_vec(),
                    sigma: c.sigma(),
                    widths: c.widths().to_vec(),
                    rotation: c.rotation_rows(),
                    lambda: c.lambda(),
                    mu_pos: c.transform().mu_pos,
                    mu_neg: c.transform().mu_neg,
                    omega: c.transform().omega,
                })
                .collect(),
            optimum_value: inst.optimum_value(),
            optimum_position: inst.optimum_position().to_vec(),
        }
    }
}

impl TryFrom<InstanceFile> for ProblemInstance {
    type Error = InstanceError;

    fn try_from(file: InstanceFile) -> Result<Self, Self::Error> {
        if file.format_version != FORMAT_VERSION {
            return Err(InstanceError::Invariant(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let bounds = Bounds::new(file.lb, file.ub)
            .ok_or_else(|| InstanceError::Invariant(format!("lb {} must be below ub {}", file.lb, file.ub)))?;
        let mut components = Vec::with_capacity(file.components.len());
        for rec in file.components {
            if rec.m.len() != file.dim {
                return Err(InstanceError::Invariant(format!(
                    "component dimension {} does not match dim {}",
                    rec.m.len(),
                    file.dim
                )));
            }
            if rec.rotation.len() != file.dim || rec.rotation.iter().any(|row| row.len() != file.dim) {
                return Err(InstanceError::Invariant("R must be dim x dim".into()));
            }
            let rotation: Vec<f64> = rec.rotation.into_iter().flatten().collect();
            components.push(Component::new(
                rec.m,
                rec.sigma,
                rec.widths,
                Some(rotation),
                rec.lambda,
                TransformParams {
                    mu_pos: rec.mu_pos,
                    mu_neg: rec.mu_neg,
                    omega: rec.omega,
                },
            )?);
        }
        let inst = ProblemInstance::from_components(bounds, components, file.instance_seed)?;
        let tol = 1e-12 * inst.optimum_value().abs().max(1.0);
        if (inst.optimum_value() - file.optimum_value).abs() > tol {
            return Err(InstanceError::Invariant(format!(
                "stored optimum_value {} disagrees with certified {}",
                file.optimum_value,
                inst.optimum_value()
            )));
        }
        let pos_ok = file.optimum_position.len() == inst.dim()
            && inst
                .optimum_position()
                .iter()
                .zip(&file.optimum_position)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
        if !pos_ok {
            return Err(InstanceError::Invariant(
                "stored optimum_position disagrees with the argmin component".into(),
            ));
        }
        Ok(inst)
    }
}

pub fn instance_to_json(inst: &ProblemInstance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from(inst)).expect("instance serializes")
}

pub fn instance_from_json(text: &str) -> Result<ProblemInstance, InstanceError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    ProblemInstance::try_from(file)
}

pub fn save_instance(inst: &ProblemInstance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    fs::write(path, instance_to_json(inst))?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ProblemInstance, InstanceError> {
    instance_from_json(&fs::read_to_string(path)?)
}
