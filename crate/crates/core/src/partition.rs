//! Sequential pairwise merging of canonical-form neurons into valid groups.
//!
//! A group `D` shares one upper-bound ReLU whose parameters are the
//! elementwise maxima `V_D = max_{i∈D} (SW)_i` and `u_D = max_{i∈D} (Sb)_i`.
//! The group is valid when `V_D · x_c + u_D <= 0`, i.e. the shared ReLU is
//! inactive at the layer centroid.

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, Matrix};

/// A valid partition of a layer's neurons together with the merged
/// upper-bound parameters of each group.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Sorted member lists, ordered by smallest member.
    pub groups: Vec<Vec<usize>>,
    /// Row `k` is `V_{D_k}`.
    pub merged_weights: Matrix,
    /// Entry `k` is `u_{D_k}`.
    pub merged_biases: Vec<f64>,
    /// Number of pair merges evaluated.
    pub candidate_merges: usize,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Group of every neuron.
    pub fn group_index(&self) -> Vec<usize> {
        let n = self.groups.iter().map(Vec::len).sum();
        let mut idx = vec![0; n];
        for (k, g) in self.groups.iter().enumerate() {
            for &i in g {
                idx[i] = k;
            }
        }
        idx
    }
}

/// Merged upper-bound parameters `(V_D, u_D)` of the neurons in `group`.
pub fn merged_upper_params(sw: &Matrix, sb: &[f64], group: &[usize]) -> Result<(Vec<f64>, f64)> {
    check_len("canonical bias", sw.rows(), sb.len())?;
    let (&first, rest) = group.split_first().ok_or(Error::EmptyGroup)?;
    let check = |i: usize| {
        if i < sw.rows() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: sw.rows(),
            })
        }
    };
    check(first)?;
    let mut v = sw.row(first).to_vec();
    let mut u = sb[first];
    for &i in rest {
        check(i)?;
        max_into(&mut v, sw.row(i));
        u = u.max(sb[i]);
    }
    Ok((v, u))
}

/// `V_D · x_c + u_D`.
pub fn merged_potential(v: &[f64], u: f64, xc: &[f64]) -> Result<f64> {
    check_len("centroid", v.len(), xc.len())?;
    Ok(dot(v, xc) + u)
}

/// True iff the shared ReLU of the group is inactive at `xc`. No tolerance.
pub fn is_valid_subset(v: &[f64], u: f64, xc: &[f64]) -> Result<bool> {
    Ok(merged_potential(v, u, xc)? <= 0.0)
}

fn max_into(acc: &mut [f64], row: &[f64]) {
    for (a, &r) in acc.iter_mut().zip(row) {
        *a = a.max(r);
    }
}

/// Visits pairs `(i, j)`, `i < j`, in ascending order and merges group `j`
/// into group `i` whenever both still exist and the union stays valid.
///
/// Fails with [`Error::NotCanonical`] if some single neuron is already
/// invalid at the centroid.
pub fn valid_partition(sw: &Matrix, sb: &[f64], xc: &[f64]) -> Result<Partition> {
    let n = sw.rows();
    check_len("canonical bias", n, sb.len())?;
    check_len("layer centroid", sw.cols(), xc.len())?;

    for i in 0..n {
        let potential = dot(sw.row(i), xc) + sb[i];
        if !(potential <= 0.0) {
            return Err(Error::NotCanonical { neuron: i, potential });
        }
    }

    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut weights: Vec<Vec<f64>> = sw.iter_rows().map(<[f64]>::to_vec).collect();
    let mut biases = sb.to_vec();
    let mut candidate = vec![0.0; sw.cols()];
    let mut candidate_merges = 0;

    for i in 0..n.saturating_sub(1) {
        if members[i].is_none() {
            continue;
        }
        for j in i + 1..n {
            if members[j].is_none() {
                continue;
            }
            candidate_merges += 1;
            candidate.copy_from_slice(&weights[i]);
            max_into(&mut candidate, &weights[j]);
            let u = biases[i].max(biases[j]);
            if dot(&candidate, xc) + u <= 0.0 {
                let absorbed = members[j].take().expect("checked above");
                members[i].as_mut().expect("checked above").extend(absorbed);
                weights[i].copy_from_slice(&candidate);
                biases[i] = u;
            }
        }
    }

    let mut groups = Vec::new();
    let mut data = Vec::new();
    let mut merged_biases = Vec::new();
    for (i, m) in members.into_iter().enumerate() {
        if let Some(mut g) = m {
            g.sort_unstable();
            groups.push(g);
            data.extend_from_slice(&weights[i]);
            merged_biases.push(biases[i]);
        }
    }
    let partition = Partition {
        merged_weights: Matrix::from_row_major(groups.len(), sw.cols(), data)?,
        groups,
        merged_biases,
        candidate_merges,
    };
    check_partition(&partition, sw, sb, xc)?;
    Ok(partition)
}

/// Recomputes every group's parameters from scratch and checks disjointness,
/// coverage and validity.
pub fn check_partition(p: &Partition, sw: &Matrix, sb: &[f64], xc: &[f64]) -> Result<()> {
    let n = sw.rows();
    let mut seen = vec![false; n];
    for (k, g) in p.groups.iter().enumerate() {
        let (v, u) = merged_upper_params(sw, sb, g)?;
        if v.as_slice() != p.merged_weights.row(k) || u != p.merged_biases[k] {
            return Err(Error::InvalidPartition(format!(
                "stored parameters of group {k} differ from the recomputed maxima"
            )));
        }
        let potential = merged_potential(&v, u, xc)?;
        if !(potential <= 0.0) {
            return Err(Error::InvalidPartition(format!(
                "group {k} has potential {potential} > 0 at the centroid"
            )));
        }
        for &i in g {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPartition(format!("neuron {i} appears twice")));
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPartition(format!("neuron {i} is not covered")));
    }
    Ok(())
}
