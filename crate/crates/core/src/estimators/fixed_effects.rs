//! Two-way fixed effects: unit demeaning plus month dummies, or explicit
//! unit and month dummies.

use std::collections::{BTreeSet, HashSet};

use super::{unit_blocks, EstimationProblem, FixedEffectsImpl};
use crate::error::{Error, Result};
use crate::linalg::{hstack, independent_columns, select_cols, select_rows, Matrix, Vector};

const ZERO_COLUMN_TOL: f64 = 1e-12;
const DEPENDENT_TOL: f64 = 1e-10;

fn is_constant(m: &Matrix, j: usize) -> bool {
    let c = m.column(j);
    let first = c[0];
    first != 0.0 && c.iter().all(|v| *v == first)
}

fn demean_blocks(m: &mut Matrix, blocks: &[(usize, usize)]) {
    for j in 0..m.ncols() {
        let mut col = m.column_mut(j);
        for &(a, b) in blocks {
            let mean = col.rows(a, b - a).sum() / (b - a) as f64;
            col.rows_mut(a, b - a).add_scalar_mut(-mean);
        }
    }
}

/// Removes the named columns from `x` and `z`, keeping the endogenous
/// index list aligned. Endogenous columns cannot be removed.
fn drop_named(p: &mut EstimationProblem, names: &HashSet<String>) -> Result<()> {
    if names.is_empty() {
        return Ok(());
    }
    if let Some(&j) = p.endogenous.iter().find(|&&j| names.contains(&p.x_names[j])) {
        return Err(Error::RankDeficient(vec![p.x_names[j].clone()]));
    }
    let keep_x: Vec<usize> = (0..p.k()).filter(|&j| !names.contains(&p.x_names[j])).collect();
    let keep_z: Vec<usize> = (0..p.l()).filter(|&j| !names.contains(&p.z_names[j])).collect();
    p.endogenous = p
        .endogenous
        .iter()
        .map(|&e| keep_x.iter().position(|&j| j == e).expect("endogenous column kept"))
        .collect();
    p.x = select_cols(&p.x, &keep_x);
    p.z = select_cols(&p.z, &keep_z);
    p.x_names = keep_x.iter().map(|&j| p.x_names[j].clone()).collect();
    p.z_names = keep_z.iter().map(|&j| p.z_names[j].clone()).collect();
    Ok(())
}

/// Applies the problem's [`FixedEffectsSpec`](super::FixedEffectsSpec).
///
/// Within mode removes rows of single-observation units (they carry no
/// within variation), demeans `y`, `X` and `Z` by unit and appends month
/// dummies for all but the first month. Full-dummies mode appends every
/// unit dummy and the same month dummies without demeaning. Constant
/// columns are dropped whenever unit effects are on.
pub fn apply_fixed_effects(problem: &EstimationProblem) -> Result<EstimationProblem> {
    let mut p = problem.clone();
    if p.fe_applied {
        return Ok(p);
    }
    p.fe_applied = true;
    let fe = p.fe;
    if !fe.unit_effects && !fe.time_effects {
        return Ok(p);
    }
    let within = fe.unit_effects && fe.implementation == FixedEffectsImpl::WithinPlusTimeDummies;

    if within {
        let blocks = unit_blocks(&p.unit);
        let keep: Vec<usize> = blocks.iter().filter(|(a, b)| b - a > 1).flat_map(|&(a, b)| a..b).collect();
        let removed = p.n() - keep.len();
        if removed > 0 {
            log::warn!("{removed} single-observation unit(s) removed by the within transformation");
            p.y = Vector::from_iterator(keep.len(), keep.iter().map(|&i| p.y[i]));
            p.x = select_rows(&p.x, &keep);
            p.z = select_rows(&p.z, &keep);
            p.unit = keep.iter().map(|&i| p.unit[i]).collect();
            p.time = keep.iter().map(|&i| p.time[i]).collect();
            p.singleton_rows += removed;
        }
        if p.n() == 0 {
            return Err(Error::InvalidArgument("no unit has more than one observation".into()));
        }
    }

    let has_constant = (0..p.k()).any(|j| !p.endogenous.contains(&j) && is_constant(&p.x, j));
    if fe.unit_effects {
        let constants: HashSet<String> = (0..p.k())
            .filter(|&j| !p.endogenous.contains(&j) && is_constant(&p.x, j))
            .map(|j| p.x_names[j].clone())
            .chain((0..p.l()).filter(|&j| is_constant(&p.z, j)).map(|j| p.z_names[j].clone()))
            .collect();
        drop_named(&mut p, &constants)?;
    }

    let n = p.n();
    let mut dummies: Vec<(String, Vec<usize>)> = Vec::new();
    if fe.unit_effects && !within {
        let units: BTreeSet<usize> = p.unit.iter().copied().collect();
        for u in units {
            let rows = (0..n).filter(|&i| p.unit[i] == u).collect();
            dummies.push((format!("unit[{u}]"), rows));
        }
    }
    if fe.time_effects {
        let times: BTreeSet<i64> = p.time.iter().copied().collect();
        // with unit effects or a constant, the first month is the base level
        let skip = usize::from(fe.unit_effects || has_constant);
        for t in times.into_iter().skip(skip) {
            let rows = (0..n).filter(|&i| p.time[i] == t).collect();
            dummies.push((format!("time[{t}]"), rows));
        }
    }
    let mut d = Matrix::zeros(n, dummies.len());
    for (j, (_, rows)) in dummies.iter().enumerate() {
        for &i in rows {
            d[(i, j)] = 1.0;
        }
    }
    let names: Vec<String> = dummies.into_iter().map(|(name, _)| name).collect();
    p.x = hstack(&[&p.x, &d]);
    p.z = hstack(&[&p.z, &d]);
    p.x_names.extend(names.iter().cloned());
    p.z_names.extend(names.iter().cloned());
    p.fe_columns = names.len();

    if within {
        let blocks = unit_blocks(&p.unit);
        let mut y = Matrix::from_column_slice(n, 1, p.y.as_slice());
        demean_blocks(&mut y, &blocks);
        p.y = y.column(0).into_owned();
        demean_blocks(&mut p.x, &blocks);
        demean_blocks(&mut p.z, &blocks);
        p.absorbed += blocks.len();

        // regressors without within-unit variation vanish
        let zero = |m: &Matrix, orig: &Matrix, j: usize, oj: Option<usize>| {
            let scale = oj.map_or(1.0, |oj| orig.column(oj).amax().max(1.0));
            m.column(j).amax() <= ZERO_COLUMN_TOL * scale
        };
        let mut vanished = HashSet::new();
        for j in 0..p.k() {
            let oj = problem.x_names.iter().position(|s| *s == p.x_names[j]);
            if zero(&p.x, &problem.x, j, oj) {
                vanished.insert(p.x_names[j].clone());
            }
        }
        for j in 0..p.l() {
            let oj = problem.z_names.iter().position(|s| *s == p.z_names[j]);
            if zero(&p.z, &problem.z, j, oj) {
                vanished.insert(p.z_names[j].clone());
            }
        }
        let main: Vec<&String> = vanished.iter().filter(|s| !names.contains(s)).collect();
        if !main.is_empty() {
            log::warn!("columns without within-unit variation dropped: {main:?}");
        }
        drop_named(&mut p, &vanished)?;
    }

    // dummies collinear with the retained design
    let k_main = p.k() - p.x_names.iter().filter(|s| names.contains(s)).count();
    let (_, dependent) = independent_columns(&p.x, DEPENDENT_TOL);
    let redundant: HashSet<String> = dependent.iter().filter(|&&j| j >= k_main).map(|&j| p.x_names[j].clone()).collect();
    drop_named(&mut p, &redundant)?;
    p.fe_columns = p.x_names.iter().filter(|s| names.contains(s)).count();
    Ok(p)
}
