//! HTTP model adapter: `POST {base}/predict` with `{"x":[...]}` returning
//! `{"y":<number>}`. When `GET {base}/capabilities` reports `{"batch":true}`,
//! batches go out as `{"xs":[[...],...]}` and come back as `{"ys":[...]}`.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::Model;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Serialize)]
struct Single<'a> {
    x: &'a [f64],
}

#[derive(Deserialize)]
struct SingleResponse {
    y: f64,
}

#[derive(Serialize)]
struct Batch<'a> {
    xs: &'a [Vec<f64>],
}

#[derive(Deserialize)]
struct BatchResponse {
    ys: Vec<f64>,
}

#[derive(Deserialize, Default)]
struct Capabilities {
    #[serde(default)]
    batch: bool,
}

pub struct HttpModel {
    base: String,
    dimension: usize,
    agent: Agent,
    batch: bool,
    cache: Mutex<HashMap<Vec<u64>, f64>>,
}

fn transport(e: impl std::fmt::Display) -> Error {
    Error::Transport(e.to_string())
}

impl HttpModel {
    /// Connects to `base` (e.g. `http://localhost:8000`) and probes its
    /// capabilities. A failed probe means single-input requests only.
    pub fn connect(base: impl Into<String>, dimension: usize, timeout: Duration) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        let agent: Agent = Agent::config_builder().timeout_global(Some(timeout)).build().into();
        let batch = agent
            .get(format!("{base}/capabilities"))
            .call()
            .ok()
            .and_then(|mut r| r.body_mut().read_json::<Capabilities>().ok())
            .unwrap_or_default()
            .batch;
        Self {
            base,
            dimension,
            agent,
            batch,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn supports_batch(&self) -> bool {
        self.batch
    }

    fn key(x: &[f64]) -> Vec<u64> {
        x.iter().map(|v| v.to_bits()).collect()
    }

    fn query(&self, x: &[f64]) -> Result<f64> {
        if let Some(&y) = self.cache.lock().unwrap().get(&Self::key(x)) {
            return Ok(y);
        }
        let resp: SingleResponse = self
            .agent
            .post(format!("{}/predict", self.base))
            .send_json(Single { x })
            .map_err(transport)?
            .body_mut()
            .read_json()
            .map_err(transport)?;
        if !resp.y.is_finite() {
            return Err(Error::Transport("model returned a non-finite y".into()));
        }
        self.cache.lock().unwrap().insert(Self::key(x), resp.y);
        Ok(resp.y)
    }

    fn query_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let resp: BatchResponse = self
            .agent
            .post(format!("{}/predict", self.base))
            .send_json(Batch { xs })
            .map_err(transport)?
            .body_mut()
            .read_json()
            .map_err(transport)?;
        if resp.ys.len() != xs.len() {
            return Err(Error::Transport(format!(
                "batch of {} inputs returned {} outputs",
                xs.len(),
                resp.ys.len()
            )));
        }
        if resp.ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::Transport("model returned a non-finite y".into()));
        }
        let mut cache = self.cache.lock().unwrap();
        for (x, &y) in xs.iter().zip(&resp.ys) {
            cache.entry(Self::key(x)).or_insert(y);
        }
        // cached values win so repeated inputs stay deterministic
        Ok(xs.iter().map(|x| cache[&Self::key(x)]).collect())
    }
}

impl<T: Scalar> Model<T> for HttpModel {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn predict(&self, x: &[T]) -> Result<T> {
        let xs: Vec<f64> = x.iter().map(|v| v.to_f64_lossy()).collect();
        self.query(&xs).map(T::of)
    }

    fn predict_batch(&self, xs: &[Vec<T>]) -> Result<Vec<T>> {
        let xs: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| x.iter().map(|v| v.to_f64_lossy()).collect())
            .collect();
        if self.batch {
            Ok(self.query_batch(&xs)?.into_iter().map(T::of).collect())
        } else {
            xs.iter().map(|x| self.query(x).map(T::of)).collect()
        }
    }
}
