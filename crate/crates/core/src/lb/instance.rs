use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::norm::{NormSpec, Objective};

/// A `D × k` non-negative matrix, stored row-major. Column `j` is the load
/// vector of option `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct JobMatrix {
    rows: usize,
    options: usize,
    data: Vec<f64>,
}

impl JobMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if m == 0 || k == 0 {
            return Err(Error::InvalidInput("job matrix needs at least one row and column".into()));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::InvalidInput(format!(
                "job matrix row {r} has {} entries, expected {k}",
                rows[r].len()
            )));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("job matrix entries must be finite and ≥ 0".into()));
        }
        Ok(Self {
            rows: m,
            options: k,
            data,
        })
    }

    /// Builds the matrix from per-option load vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let d = columns.first().map_or(0, Vec::len);
        Self::new((0..d).map(|i| columns.iter().map(|c| c.get(i).copied().unwrap_or(f64::NAN)).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn options(&self) -> usize {
        self.options
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.options + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `load += C·e_j`.
    pub fn add_column_to(&self, j: usize, load: &mut [f64]) {
        for (i, l) in load.iter_mut().enumerate() {
            *l += self.get(i, j);
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.options).map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for JobMatrix {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<JobMatrix> for Vec<Vec<f64>> {
    fn from(m: JobMatrix) -> Self {
        m.to_rows()
    }
}

/// A load-balancing instance. For vector scheduling the objective is
/// nested and every job matrix has `m·r` rows in resource-major order.
#[derive(Debug, Clone)]
pub struct LbInstance {
    pub objective: Objective,
    pub options: usize,
    pub jobs: Vec<JobMatrix>,
    norm_text: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    m: usize,
    k: usize,
    #[serde(rename = "T")]
    t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    norm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inner: Option<Vec<String>>,
}

impl LbInstance {
    /// A plain load-balancing instance; `norm` uses the CLI grammar.
    pub fn new(norm: &str, m: usize, jobs: Vec<JobMatrix>) -> Result<Self> {
        let spec = NormSpec::parse(norm, m)?;
        Self::build(Objective::Norm(spec), vec![norm.to_string()], jobs)
    }

    /// A vector-scheduling instance; `jobs[t][j][machine][resource]`.
    pub fn vector(inner: &[&str], m: usize, jobs: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        let specs = inner
            .iter()
            .map(|s| NormSpec::parse(s, m))
            .collect::<Result<Vec<_>>>()?;
        let r = specs.len();
        let objective = Objective::nested(m, specs)?;
        let mats = jobs
            .iter()
            .enumerate()
            .map(|(t, job)| flatten_vector_job(job, m, r).map_err(|e| e.context(format!("job {}", t + 1))))
            .collect::<Result<Vec<_>>>()?;
        Self::build(objective, inner.iter().map(|s| s.to_string()).collect(), mats)
    }

    fn build(objective: Objective, norm_text: Vec<String>, jobs: Vec<JobMatrix>) -> Result<Self> {
        let first = jobs
            .first()
            .ok_or_else(|| Error::InvalidInput("instance needs T ≥ 1 jobs".into()))?;
        let k = first.options();
        for (t, j) in jobs.iter().enumerate() {
            if j.rows() != objective.dim() || j.options() != k {
                return Err(Error::InvalidInput(format!(
                    "job {} is {}×{}, expected {}×{k}",
                    t + 1,
                    j.rows(),
                    j.options(),
                    objective.dim()
                )));
            }
        }
        Ok(Self {
            objective,
            options: k,
            jobs,
            norm_text,
        })
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn horizon(&self) -> usize {
        self.jobs.len()
    }

    /// Machines per resource.
    pub fn machines(&self) -> usize {
        match &self.objective {
            Objective::Norm(s) => s.dim(),
            Objective::Nested { machines, .. } => *machines,
        }
    }

    pub fn is_vector(&self) -> bool {
        matches!(self.objective, Objective::Nested { .. })
    }

    /// Reads the JSON-lines format: a header line, then one job per line.
    pub fn read_jsonl(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (_, head) = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty instance file".into()))?;
        let header: Header = serde_json::from_str(&head?).map_err(|e| Error::from(e).context("line 1"))?;
        let mut jobs = Vec::with_capacity(header.t);
        for (n, line) in lines {
            let ctx = |e: Error| e.context(format!("line {}", n + 1));
            let v: Value = serde_json::from_str(&line?).map_err(|e| ctx(e.into()))?;
            let c = v.get("C").ok_or_else(|| ctx(Error::InvalidInput("missing field C".into())))?;
            jobs.push(c.clone());
        }
        if jobs.len() != header.t {
            return Err(Error::InvalidInput(format!(
                "header declares T = {} but the file has {} jobs",
                header.t,
                jobs.len()
            )));
        }
        let inst = match (&header.inner, header.r) {
            (Some(inner), r) => {
                if r.is_some_and(|r| r != inner.len()) {
                    return Err(Error::InvalidInput("r does not match the number of inner norms".into()));
                }
                let parsed = jobs
                    .into_iter()
                    .enumerate()
                    .map(|(t, c)| {
                        serde_json::from_value::<Vec<Vec<Vec<f64>>>>(c)
                            .map_err(|e| Error::from(e).context(format!("job {}", t + 1)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let refs: Vec<&str> = inner.iter().map(String::as_str).collect();
                Self::vector(&refs, header.m, parsed)?
            }
            (None, _) => {
                let norm = header
                    .norm
                    .as_deref()
                    .ok_or_else(|| Error::InvalidInput("header needs \"norm\" or \"inner\"".into()))?;
                let parsed = jobs
                    .into_iter()
                    .enumerate()
                    .map(|(t, c)| {
                        serde_json::from_value::<JobMatrix>(c)
                            .map_err(|e| Error::from(e).context(format!("job {}", t + 1)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::new(norm, header.m, parsed)?
            }
        };
        if inst.options != header.k || inst.machines() != header.m {
            return Err(Error::InvalidInput(format!(
                "jobs are {}×{} but the header declares m = {}, k = {}",
                inst.machines(),
                inst.options,
                header.m,
                header.k
            )));
        }
        Ok(inst)
    }

    pub fn to_jsonl(&self) -> String {
        let m = self.machines();
        let header = if self.is_vector() {
            Header {
                m,
                k: self.options,
                t: self.horizon(),
                norm: None,
                r: Some(self.norm_text.len()),
                inner: Some(self.norm_text.clone()),
            }
        } else {
            Header {
                m,
                k: self.options,
                t: self.horizon(),
                norm: Some(self.norm_text[0].clone()),
                r: None,
                inner: None,
            }
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for job in &self.jobs {
            let c = if self.is_vector() {
                let r = self.norm_text.len();
                let per_option: Vec<Vec<Vec<f64>>> = (0..self.options)
                    .map(|j| {
                        (0..m)
                            .map(|mach| (0..r).map(|res| job.get(res * m + mach, j)).collect())
                            .collect()
                    })
                    .collect();
                serde_json::json!({ "C": per_option })
            } else {
                serde_json::json!({ "C": job.to_rows() })
            };
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }
}

fn flatten_vector_job(job: &[Vec<Vec<f64>>], m: usize, r: usize) -> Result<JobMatrix> {
    let mut columns = Vec::with_capacity(job.len());
    for (j, opt) in job.iter().enumerate() {
        if opt.len() != m || opt.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidInput(format!("option {j} is not an {m}×{r} matrix")));
        }
        let mut col = vec![0.0; m * r];
        for (mach, row) in opt.iter().enumerate() {
            for (res, v) in row.iter().enumerate() {
                col[res * m + mach] = *v;
            }
        }
        columns.push(col);
    }
    JobMatrix::from_columns(&columns)
}
