//! Per-macro-element structure flags, closed-form verdicts and, optionally,
//! the numeric nullspace dimension.

use anyhow::Result;
use stokes_lbb::fespace::FECombo;
use stokes_lbb::infsup::local_nullspace;
use stokes_lbb::macroelement::{
    build_macroelements, classify_2d, classify_3d, predict_regularity, predict_regularity_3d, MacroElement,
    RegularityVerdict, StructureFlags, Tolerances,
};
use stokes_lbb::mesh::{CellKind, Mesh};

use crate::report::{f, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct MacroRow {
    pub center: usize,
    pub n_v: usize,
    pub flags: StructureFlags,
    pub combo: FECombo,
    /// `None` when no closed form covers this combination and cell type.
    pub verdict: Option<RegularityVerdict>,
    pub numeric_dim: Option<usize>,
}

impl MacroRow {
    pub fn agrees(&self) -> Option<bool> {
        Some(self.verdict?.is_regular() == (self.numeric_dim? == 0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub rows: Vec<MacroRow>,
    pub warnings: Vec<String>,
}

impl Analysis {
    /// Fraction of rows with both a verdict and a numeric dimension on
    /// which the two agree; 1 when there are none.
    pub fn agreement(&self) -> f64 {
        let judged: Vec<bool> = self.rows.iter().filter_map(|r| r.agrees()).collect();
        if judged.is_empty() {
            return 1.0;
        }
        judged.iter().filter(|&&a| a).count() as f64 / judged.len() as f64
    }

    pub fn count_singular(&self, combo: &FECombo) -> usize {
        self.rows.iter().filter(|r| &r.combo == combo && r.verdict.is_some_and(|v| !v.is_regular())).count()
    }

    pub fn table(&self, oracle: bool) -> Table {
        let mut cols = vec![
            "center",
            "n_v",
            "x_structured",
            "y_structured",
            "z_structured",
            "min_sin",
            "min_cos",
            "aligned_x",
            "aligned_y",
            "semi_planes",
            "semi_planes_aligned",
            "combo",
            "predicted",
            "reason",
            "s_over_scale",
        ];
        if oracle {
            cols.extend(["numeric_dim", "agree"]);
        }
        let mut t = Table::new(&cols);
        for r in &self.rows {
            let fl = &r.flags;
            let (pred, reason, s) = match r.verdict {
                Some(v) => (
                    if v.is_regular() { "regular" } else { "singular" }.to_string(),
                    format!("{:?}", v.reason),
                    match (v.s_value, v.s_scale) {
                        (Some(s), Some(sc)) => f((s / sc).abs()),
                        _ => String::new(),
                    },
                ),
                None => ("n/a".into(), String::new(), String::new()),
            };
            let mut row = vec![
                r.center.to_string(),
                r.n_v.to_string(),
                fl.x_structured.to_string(),
                fl.y_structured.to_string(),
                fl.z_structured.to_string(),
                f(fl.min_sin),
                f(fl.min_cos),
                fl.aligned_count_x.to_string(),
                fl.aligned_count_y.to_string(),
                fl.semi_plane_count.to_string(),
                fl.semi_planes_aligned.to_string(),
                r.combo.to_string(),
                pred,
                reason,
                s,
            ];
            if oracle {
                row.push(r.numeric_dim.map(|d| d.to_string()).unwrap_or_default());
                row.push(r.agrees().map(|a| a.to_string()).unwrap_or_default());
            }
            t.push(row);
        }
        t
    }
}

fn flags(mesh: &Mesh, m: &MacroElement, tol: Tolerances) -> StructureFlags {
    match mesh.kind() {
        CellKind::Triangle => classify_2d(mesh, m, tol.alignment),
        CellKind::Tetrahedron => classify_3d(mesh, m, tol.alignment),
        CellKind::Quadrilateral => StructureFlags::default(),
    }
}

fn verdict(mesh: &Mesh, m: &MacroElement, combo: &FECombo, tol: Tolerances) -> Option<RegularityVerdict> {
    match mesh.kind() {
        CellKind::Triangle => predict_regularity(mesh, m, combo, tol).ok(),
        CellKind::Tetrahedron => predict_regularity_3d(mesh, m, combo, tol.alignment).ok(),
        CellKind::Quadrilateral => None,
    }
}

pub fn analyze(mesh: &Mesh, combos: &[FECombo], oracle: bool, tol: Tolerances) -> Result<Analysis> {
    let cover = build_macroelements(mesh);
    let mut warnings = cover.warnings.clone();
    if cover.macros.is_empty() {
        warnings.push("mesh has no interior vertex, so no macro-element covers it".into());
    } else if !cover.uncovered_cells.is_empty() {
        warnings.push(format!("{} cells lie in no vertex-centered macro-element", cover.uncovered_cells.len()));
    }
    let mut rows = Vec::new();
    for m in &cover.macros {
        let fl = flags(mesh, m, tol);
        for c in combos {
            let numeric_dim = if oracle { Some(local_nullspace(mesh, m, c)?.dim) } else { None };
            rows.push(MacroRow {
                center: m.center,
                n_v: m.n_v(),
                flags: fl,
                combo: c.clone(),
                verdict: verdict(mesh, m, c, tol),
                numeric_dim,
            });
        }
    }
    Ok(Analysis { rows, warnings })
}
