//! Instance serialization for cross-checking against other implementations.
//!
//! Formats:
//! - edge list: text, one `"i j"` line per undirected edge, 0-based, `i < j`;
//! - features: binary, 16-byte header (magic `CSBMFEAT`, little-endian `u32 P`,
//!   `u32 N`) followed by the `P x N` matrix row-major as little-endian f64;
//! - labels: text, one label per line (`+1` / `-1`);
//! - params: text `key = value` lines (provenance for reload).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::model::{Features, Instance, ModelParams};

pub const FEATURE_MAGIC: &[u8; 8] = b"CSBMFEAT";

pub fn write_edge_list<W: Write>(graph: &SparseGraph, mut w: W) -> Result<()> {
    for (i, j) in graph.edges() {
        writeln!(w, "{i} {j}")?;
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(n: usize, r: R) -> Result<SparseGraph> {
    let mut edges = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.split_whitespace();
        let parse = |s: Option<&str>| -> Result<u32> {
            s.ok_or_else(|| Error::Parse(format!("edge list line {}: missing field", lineno + 1)))?
                .parse::<u32>()
                .map_err(|e| Error::Parse(format!("edge list line {}: {e}", lineno + 1)))
        };
        let i = parse(parts.next())?;
        let j = parse(parts.next())?;
        edges.push((i, j));
    }
    SparseGraph::from_edges(n, &edges)
}

pub fn write_features<W: Write>(features: &Features, mut w: W) -> Result<()> {
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&(features.p() as u32).to_le_bytes())?;
    w.write_all(&(features.n() as u32).to_le_bytes())?;
    // row-major P x N
    let mut row = vec![0u8; features.n() * 8];
    for beta in 0..features.p() {
        for i in 0..features.n() {
            let bits = features.get(beta, i).to_le_bytes();
            row[i * 8..(i + 1) * 8].copy_from_slice(&bits);
        }
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn read_features<R: Read>(mut r: R) -> Result<Features> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..8] != FEATURE_MAGIC {
        return Err(Error::Parse("bad feature-file magic".into()));
    }
    let p = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut data = vec![0f32; p * n];
    let mut row = vec![0u8; n * 8];
    for beta in 0..p {
        r.read_exact(&mut row)?;
        for i in 0..n {
            let v = f64::from_le_bytes(row[i * 8..(i + 1) * 8].try_into().unwrap());
            data[i * p + beta] = v as f32;
        }
    }
    Ok(Features::new(p, n, data))
}

pub fn write_labels<W: Write>(labels: &[i8], mut w: W) -> Result<()> {
    for &u in labels {
        writeln!(w, "{u}")?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(r: R) -> Result<Vec<i8>> {
    let mut labels = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: i8 = t
            .parse()
            .map_err(|e| Error::Parse(format!("labels line {}: {e}", lineno + 1)))?;
        if v != 1 && v != -1 {
            return Err(Error::Parse(format!(
                "labels line {}: expected +1 or -1, got {v}",
                lineno + 1
            )));
        }
        labels.push(v);
    }
    Ok(labels)
}

fn write_params<W: Write>(params: &ModelParams, seed: u64, mut w: W) -> Result<()> {
    writeln!(w, "n = {}", params.n_nodes)?;
    writeln!(w, "p = {}", params.feature_dim)?;
    writeln!(w, "d = {}", params.avg_degree)?;
    writeln!(w, "lambda = {}", params.snr_lambda)?;
    writeln!(w, "mu = {}", params.snr_mu)?;
    writeln!(w, "rho = {}", params.train_fraction)?;
    writeln!(w, "q = {}", params.label_flip_keep_prob)?;
    writeln!(w, "groups = {}", params.num_groups)?;
    writeln!(w, "seed = {seed}")?;
    Ok(())
}

fn read_params<R: BufRead>(r: R) -> Result<(ModelParams, u64)> {
    let mut params = ModelParams::new(1, 1, 0.0, 0.0, 0.0);
    let mut seed = 0u64;
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("params line without '=': {t}")))?;
        let k = k.trim();
        let v = v.trim();
        let fv = || -> Result<f64> {
            v.parse()
                .map_err(|e| Error::Parse(format!("params {k}: {e}")))
        };
        match k {
            "n" => params.n_nodes = fv()? as usize,
            "p" => params.feature_dim = fv()? as usize,
            "d" => params.avg_degree = fv()?,
            "lambda" => params.snr_lambda = fv()?,
            "mu" => params.snr_mu = fv()?,
            "rho" => params.train_fraction = fv()?,
            "q" => params.label_flip_keep_prob = fv()?,
            "groups" => params.num_groups = fv()? as usize,
            "seed" => seed = fv()? as u64,
            _ => return Err(Error::Parse(format!("unknown params key {k}"))),
        }
    }
    Ok((params, seed))
}

/// Writes `edges.txt`, `features.bin`, `labels.txt`, `centroids.txt` and
/// `params.txt` into `dir` (created if absent).
pub fn save_instance(instance: &Instance, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_edge_list(
        &instance.graph,
        BufWriter::new(File::create(dir.join("edges.txt"))?),
    )?;
    write_features(
        &instance.features,
        BufWriter::new(File::create(dir.join("features.bin"))?),
    )?;
    write_labels(
        &instance.truth_labels,
        BufWriter::new(File::create(dir.join("labels.txt"))?),
    )?;
    let mut cw = BufWriter::new(File::create(dir.join("centroids.txt"))?);
    for v in &instance.centroids {
        writeln!(cw, "{}", hexfloat(*v))?;
    }
    write_params(
        &instance.params,
        instance.seed,
        BufWriter::new(File::create(dir.join("params.txt"))?),
    )?;
    Ok(())
}

pub fn load_instance(dir: &Path) -> Result<Instance> {
    let (params, seed) = read_params(BufReader::new(File::open(dir.join("params.txt"))?))?;
    let graph = read_edge_list(
        params.n_nodes,
        BufReader::new(File::open(dir.join("edges.txt"))?),
    )?;
    let features = read_features(BufReader::new(File::open(dir.join("features.bin"))?))?;
    let labels = read_labels(BufReader::new(File::open(dir.join("labels.txt"))?))?;
    let mut centroids = Vec::new();
    for line in BufReader::new(File::open(dir.join("centroids.txt"))?).lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        centroids.push(parse_hexfloat(t)?);
    }
    Instance::from_parts(graph, features, labels, centroids, params, seed)
}

// Centroids round-trip bit-exactly through a hex encoding of the f64 bits.
fn hexfloat(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn parse_hexfloat(s: &str) -> Result<f64> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|e| Error::Parse(format!("centroid value {s}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_instance, ModelParams};

    #[test]
    fn instance_round_trips_bit_identically() {
        let params = ModelParams::new(120, 17, 3.0, 0.7, 1.3);
        let inst = sample_instance(&params, 99).unwrap();
        let dir = std::env::temp_dir().join(format!("csbm-io-test-{}", std::process::id()));
        save_instance(&inst, &dir).unwrap();
        let back = load_instance(&dir).unwrap();
        std::fs::remove_dir_all(&dir).ok();

        assert_eq!(back.params, inst.params);
        assert_eq!(back.seed, inst.seed);
        assert_eq!(back.graph, inst.graph);
        assert_eq!(back.truth_labels, inst.truth_labels);
        assert_eq!(back.features, inst.features);
        let a: Vec<u64> = inst.centroids.iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = back.centroids.iter().map(|x| x.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn feature_header_is_validated() {
        let bytes = b"NOTMAGIC\x01\x00\x00\x00\x01\x00\x00\x00";
        assert!(read_features(&bytes[..]).is_err());
    }
}
