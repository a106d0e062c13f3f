use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Add,
    Mul,
    Div,
    /// Shift by a variable amount (barrel shifter).
    Shift,
    Logic,
    Reduce,
    Compare,
    Relational,
    Mux,
    Select,
    Register,
}

impl OpKind {
    pub const ALL: [OpKind; 11] = [
        OpKind::Add,
        OpKind::Mul,
        OpKind::Div,
        OpKind::Shift,
        OpKind::Logic,
        OpKind::Reduce,
        OpKind::Compare,
        OpKind::Relational,
        OpKind::Mux,
        OpKind::Select,
        OpKind::Register,
    ];
}

/// Cells per unit in each width bucket (1-4, 5-16, 17-64, wider), area
/// per cell and delay per logic level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpWeight {
    pub cells: [u64; 4],
    pub area: f64,
    pub delay: f64,
}

impl OpWeight {
    const fn flat(cells: u64, area: f64) -> Self {
        OpWeight {
            cells: [cells; 4],
            area,
            delay: 1.0,
        }
    }

    pub fn cells_for(&self, width: u32) -> u64 {
        self.cells[bucket(width)]
    }
}

pub fn bucket(width: u32) -> usize {
    match width {
        0..=4 => 0,
        5..=16 => 1,
        17..=64 => 2,
        _ => 3,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub add: OpWeight,
    pub mul: OpWeight,
    pub div: OpWeight,
    pub shift: OpWeight,
    pub logic: OpWeight,
    pub reduce: OpWeight,
    pub compare: OpWeight,
    pub relational: OpWeight,
    pub mux: OpWeight,
    pub select: OpWeight,
    pub register: OpWeight,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            add: OpWeight::flat(2, 1.0),
            mul: OpWeight {
                cells: [8, 16, 24, 32],
                area: 1.0,
                delay: 1.0,
            },
            div: OpWeight {
                cells: [12, 24, 36, 48],
                area: 1.0,
                delay: 1.0,
            },
            shift: OpWeight::flat(1, 0.75),
            logic: OpWeight::flat(1, 0.5),
            reduce: OpWeight::flat(1, 0.5),
            compare: OpWeight::flat(1, 0.75),
            relational: OpWeight::flat(2, 0.75),
            mux: OpWeight::flat(1, 0.75),
            select: OpWeight::flat(1, 0.75),
            register: OpWeight::flat(1, 4.0),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WeightsError {
    #[error("cannot read weights: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid weights: {0}")]
    Json(#[from] serde_json::Error),
    #[error("weight for {0:?} must be positive")]
    NonPositive(OpKind),
}

impl CostWeights {
    pub fn get(&self, kind: OpKind) -> &OpWeight {
        match kind {
            OpKind::Add => &self.add,
            OpKind::Mul => &self.mul,
            OpKind::Div => &self.div,
            OpKind::Shift => &self.shift,
            OpKind::Logic => &self.logic,
            OpKind::Reduce => &self.reduce,
            OpKind::Compare => &self.compare,
            OpKind::Relational => &self.relational,
            OpKind::Mux => &self.mux,
            OpKind::Select => &self.select,
            OpKind::Register => &self.register,
        }
    }

    pub fn validate(&self) -> Result<(), WeightsError> {
        for k in OpKind::ALL {
            let w = self.get(k);
            let ok = w.cells.iter().all(|c| *c > 0)
                && w.area > 0.0
                && w.delay > 0.0
                && w.area.is_finite()
                && w.delay.is_finite();
            if !ok {
                return Err(WeightsError::NonPositive(k));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, WeightsError> {
        let w: CostWeights = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self, WeightsError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
