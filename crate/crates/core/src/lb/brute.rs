use super::LbInstance;
use crate::error::{Error, Result};

/// Default bound on `k^T` for exhaustive search.
pub const DEFAULT_BRUTE_CAP: f64 = 2e6;

/// Exact offline optimum by depth-first enumeration of all `k^T` option
/// sequences, pruning partial loads whose objective already reaches the best
/// value (the objective is monotone). Ties resolve to the lexicographically
/// smallest assignment.
pub fn brute_force_opt(instance: &LbInstance, cap: f64) -> Result<(f64, Vec<usize>)> {
    let size = (instance.options as f64).powi(instance.horizon() as i32);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let mut search = Search {
        inst: instance,
        best: f64::INFINITY,
        best_path: Vec::new(),
        path: Vec::with_capacity(instance.horizon()),
    };
    let load = vec![0.0; instance.dim()];
    search.visit(&load);
    Ok((search.best, search.best_path))
}

struct Search<'a> {
    inst: &'a LbInstance,
    best: f64,
    best_path: Vec<usize>,
    path: Vec<usize>,
}

impl Search<'_> {
    fn visit(&mut self, load: &[f64]) {
        let t = self.path.len();
        if t == self.inst.horizon() {
            let v = self.inst.objective.eval_unchecked(load);
            if v < self.best {
                self.best = v;
                self.best_path = self.path.clone();
            }
            return;
        }
        let job = &self.inst.jobs[t];
        let mut next = load.to_vec();
        for j in 0..job.options() {
            next.copy_from_slice(load);
            job.add_column_to(j, &mut next);
            if self.inst.objective.eval_unchecked(&next) >= self.best {
                continue;
            }
            self.path.push(j);
            self.visit(&next);
            self.path.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lb::JobMatrix;

    #[test]
    fn single_round_is_best_column() {
        let job = JobMatrix::new(vec![vec![3.0, 1.0, 2.0], vec![0.0, 4.0, 1.0]]).unwrap();
        let inst = LbInstance::new("linf", 2, vec![job]).unwrap();
        assert_eq!(brute_force_opt(&inst, DEFAULT_BRUTE_CAP).unwrap(), (2.0, vec![2]));
    }

    #[test]
    fn zero_jobs_have_zero_opt() {
        let jobs = vec![JobMatrix::new(vec![vec![0.0, 0.0]; 3]).unwrap(); 4];
        let inst = LbInstance::new("l1", 3, jobs).unwrap();
        assert_eq!(brute_force_opt(&inst, DEFAULT_BRUTE_CAP).unwrap(), (0.0, vec![0; 4]));
    }

    #[test]
    fn cap_is_enforced() {
        let jobs = vec![JobMatrix::new(vec![vec![1.0, 1.0]]).unwrap(); 30];
        let inst = LbInstance::new("linf", 1, jobs).unwrap();
        assert!(matches!(brute_force_opt(&inst, DEFAULT_BRUTE_CAP), Err(Error::CapExceeded { .. })));
    }
}
