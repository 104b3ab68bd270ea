//! Model JSON documents and trajectory CSV / binary files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{GlssError, Result};
use crate::model::{GlssModel, LetterMatrices, NoiseLaw};
use crate::simulate::{Seeds, Trajectory};
use crate::switching::{SwitchingKind, SwitchingSpec, WhiteLaw};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimsDoc {
    nx: usize,
    nu: usize,
    ny: usize,
    nn: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LetterDoc {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "K")]
    k: Rows,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchingDoc {
    kind: String,
    params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseDoc {
    #[serde(rename = "Q_factors")]
    q_factors: Vec<Rows>,
    #[serde(rename = "R_factors")]
    r_factors: Vec<Rows>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    dims: DimsDoc,
    letters: Vec<LetterDoc>,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "D")]
    d: Rows,
    #[serde(rename = "F")]
    f: Rows,
    switching: SwitchingDoc,
    noise: NoiseDoc,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    innovation: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IidWhiteParams {
    second_moments: Vec<f64>,
    law: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscreteParams {
    probabilities: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkovParams {
    states: usize,
    transition: Rows,
}

fn parse<T: serde::de::DeserializeOwned>(value: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, _) => inner.clone(),
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{inner}"),
        };
        GlssError::format(path, e.into_inner().to_string())
    })
}

fn matrix(path: &str, rows: &Rows, r: usize, c: usize) -> Result<DMatrix<f64>> {
    // an empty list stands for any matrix without entries
    if r * c == 0 && rows.iter().all(|row| row.is_empty()) && (rows.len() == r || rows.is_empty()) {
        return Ok(DMatrix::zeros(r, c));
    }
    if rows.len() != r {
        return Err(GlssError::format(
            path,
            format!("expected {r} rows, found {}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(GlssError::format(
                format!("{path}[{i}]"),
                format!("expected {c} columns, found {}", row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(GlssError::format(format!("{path}[{i}][{j}]"), "entry is not finite"));
        }
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn relabel(path: &str, e: GlssError) -> GlssError {
    match e {
        GlssError::Format { .. } => e,
        other => GlssError::format(path, other.to_string()),
    }
}

fn switching_from_doc(doc: SwitchingDoc) -> Result<SwitchingSpec> {
    let spec = match doc.kind.as_str() {
        "iid-white" => {
            let p: IidWhiteParams = parse(doc.params, "switching.params")?;
            let law = match p.law.as_str() {
                "rademacher" => WhiteLaw::Rademacher,
                "gaussian" => WhiteLaw::Gaussian,
                other => {
                    return Err(GlssError::format(
                        "switching.params.law",
                        format!("unknown law `{other}`, expected rademacher or gaussian"),
                    ))
                }
            };
            SwitchingSpec::iid_white(p.second_moments, law)
        }
        "discrete-iid" => {
            let p: DiscreteParams = parse(doc.params, "switching.params")?;
            SwitchingSpec::discrete_iid(p.probabilities)
        }
        "markov-embedded" => {
            let p: MarkovParams = parse(doc.params, "switching.params")?;
            let t = matrix("switching.params.transition", &p.transition, p.states, p.states)?;
            SwitchingSpec::markov(p.states, t)
        }
        other => {
            return Err(GlssError::format(
                "switching.kind",
                format!("unknown kind `{other}`, expected iid-white, discrete-iid or markov-embedded"),
            ))
        }
    }
    .map_err(|e| relabel("switching.params", e))?;

    if let Some(edges) = doc.edges {
        let mut given = Vec::with_capacity(edges.len());
        for (i, [a, b]) in edges.into_iter().enumerate() {
            if a == 0 || b == 0 || a > spec.size() || b > spec.size() {
                return Err(GlssError::format(
                    format!("switching.edges[{i}]"),
                    format!("letters are numbered 1..={}", spec.size()),
                ));
            }
            given.push((a - 1, b - 1));
        }
        given.sort_unstable();
        given.dedup();
        let derived: Vec<(usize, usize)> = spec.alphabet().edges().collect();
        if given != derived {
            return Err(GlssError::format(
                "switching.edges",
                "edge set differs from the one implied by the switching kind",
            ));
        }
    }
    for (name, given, derived) in [("p", &doc.p, spec.weights()), ("alpha", &doc.alpha, spec.alpha())] {
        if let Some(given) = given {
            let close = given.len() == derived.len()
                && given
                    .iter()
                    .zip(derived)
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1.0));
            if !close {
                return Err(GlssError::format(
                    format!("switching.{name}"),
                    format!("does not match the derived values {derived:?}"),
                ));
            }
        }
    }
    Ok(spec)
}

fn switching_to_doc(spec: &SwitchingSpec) -> SwitchingDoc {
    let params = match spec.kind() {
        SwitchingKind::IidWhite { second_moments, law } => serde_json::to_value(IidWhiteParams {
            second_moments: second_moments.clone(),
            law: law.name().to_string(),
        }),
        SwitchingKind::DiscreteIid { probabilities } => serde_json::to_value(DiscreteParams {
            probabilities: probabilities.clone(),
        }),
        SwitchingKind::Markov { states, transition, .. } => serde_json::to_value(MarkovParams {
            states: *states,
            transition: rows(transition),
        }),
    }
    .expect("plain data serializes");
    SwitchingDoc {
        kind: spec.kind_name().to_string(),
        params,
        edges: Some(spec.alphabet().edges().map(|(a, b)| [a + 1, b + 1]).collect()),
        p: Some(spec.weights().to_vec()),
        alpha: Some(spec.alpha().to_vec()),
    }
}

/// Parses a model document. Errors carry the JSON path of the offending
/// field.
pub fn model_from_json(text: &str) -> Result<GlssModel> {
    let value: Value = serde_json::from_str(text).map_err(|e| GlssError::format("$", e.to_string()))?;
    let doc: ModelDoc = parse(value, "")?;
    let DimsDoc { nx, nu, ny, nn } = doc.dims;
    let switching = switching_from_doc(doc.switching)?;
    if doc.letters.len() != switching.size() {
        return Err(GlssError::format(
            "letters",
            format!(
                "{} entries for an alphabet of {} letters",
                doc.letters.len(),
                switching.size()
            ),
        ));
    }
    let mut letters = Vec::with_capacity(doc.letters.len());
    for (i, l) in doc.letters.iter().enumerate() {
        letters.push(LetterMatrices {
            a: matrix(&format!("letters[{i}].A"), &l.a, nx, nx)?,
            b: matrix(&format!("letters[{i}].B"), &l.b, nx, nu)?,
            k: matrix(&format!("letters[{i}].K"), &l.k, nx, nn)?,
        });
    }
    let c = matrix("C", &doc.c, ny, nx)?;
    let d = matrix("D", &doc.d, ny, nu)?;
    let f = matrix("F", &doc.f, ny, nn)?;
    let factors = |name: &str, list: &[Rows], n: usize| -> Result<Vec<DMatrix<f64>>> {
        list.iter()
            .enumerate()
            .map(|(i, m)| matrix(&format!("noise.{name}[{i}]"), m, n, n))
            .collect()
    };
    let noise = NoiseLaw {
        v_factors: factors("Q_factors", &doc.noise.q_factors, nn)?,
        u_factors: factors("R_factors", &doc.noise.r_factors, nu)?,
    };
    let mut model = GlssModel::new(letters, c, d, f, switching, noise).map_err(|e| relabel("noise", e))?;
    model.innovation = doc.innovation;
    if model.innovation && (nn != ny || model.f != DMatrix::identity(ny, ny)) {
        return Err(GlssError::format("F", "an innovation-form model needs F = I"));
    }
    Ok(model)
}

pub fn model_to_json(model: &GlssModel) -> String {
    let doc = ModelDoc {
        dims: DimsDoc {
            nx: model.dims.nx,
            nu: model.dims.nu,
            ny: model.dims.ny,
            nn: model.dims.nn,
        },
        letters: model
            .letters
            .iter()
            .map(|l| LetterDoc {
                a: rows(&l.a),
                b: rows(&l.b),
                k: rows(&l.k),
            })
            .collect(),
        c: rows(&model.c),
        d: rows(&model.d),
        f: rows(&model.f),
        switching: switching_to_doc(&model.switching),
        noise: NoiseDoc {
            q_factors: model.noise.v_factors.iter().map(rows).collect(),
            r_factors: model.noise.u_factors.iter().map(rows).collect(),
        },
        innovation: model.innovation,
    };
    serde_json::to_string_pretty(&doc).expect("plain data serializes")
}

fn with_file(path: &Path, e: GlssError) -> GlssError {
    match e {
        GlssError::Format { path: field, message } => {
            GlssError::format(format!("{}: {field}", path.display()), message)
        }
        other => other,
    }
}

pub fn read_model(path: &Path) -> Result<GlssModel> {
    let text = fs::read_to_string(path)?;
    model_from_json(&text).map_err(|e| with_file(path, e))
}

pub fn write_model(path: &Path, model: &GlssModel) -> Result<()> {
    fs::write(path, model_to_json(model) + "\n")?;
    Ok(())
}

/// Writes column groups `name_1..name_k` as CSV with a leading `t` column.
pub fn write_csv<W: Write>(out: W, groups: &[(&str, &DMatrix<f64>)]) -> Result<()> {
    let horizon = groups.iter().map(|(_, m)| m.ncols()).max().unwrap_or(0);
    if groups.iter().any(|(_, m)| m.nrows() > 0 && m.ncols() != horizon) {
        return Err(GlssError::dim("column groups have different lengths"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for (name, m) in groups {
        header.extend((1..=m.nrows()).map(|i| format!("{name}_{i}")));
    }
    w.write_record(&header).map_err(csv_err)?;
    let mut record = Vec::with_capacity(header.len());
    for t in 0..horizon {
        record.clear();
        record.push(t.to_string());
        for (_, m) in groups {
            record.extend(m.column(t).iter().map(|v| v.to_string()));
        }
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> GlssError {
    GlssError::format("csv", e.to_string())
}

/// Reads a CSV written by [`write_csv`] into named groups, in header order.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<(String, DMatrix<f64>)>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.get(0) != Some("t") {
        return Err(GlssError::format("csv header", "first column must be `t`"));
    }
    let mut groups: Vec<(String, usize)> = Vec::new();
    for (j, h) in header.iter().enumerate().skip(1) {
        let (name, idx) = h
            .rsplit_once('_')
            .and_then(|(n, i)| i.parse::<usize>().ok().map(|i| (n, i)))
            .ok_or_else(|| {
                GlssError::format(
                    format!("csv header column {}", j + 1),
                    format!("`{h}` is not name_index"),
                )
            })?;
        let continues = matches!(groups.last(), Some((last, count)) if last == name && count + 1 == idx);
        let starts = idx == 1 && groups.iter().all(|(n, _)| n != name);
        match (continues, starts) {
            (true, _) => groups.last_mut().expect("checked").1 += 1,
            (false, true) => groups.push((name.to_string(), 1)),
            _ => {
                return Err(GlssError::format(
                    format!("csv header column {}", j + 1),
                    format!("`{h}` is out of order"),
                ))
            }
        }
    }
    let width = header.len() - 1;
    let mut data: Vec<f64> = Vec::new();
    let mut horizon = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != width + 1 {
            return Err(GlssError::format(
                format!("csv row {}", line + 2),
                "wrong number of fields",
            ));
        }
        for (j, field) in rec.iter().enumerate().skip(1) {
            let v: f64 = field.trim().parse().map_err(|_| {
                GlssError::format(
                    format!("csv row {} column {}", line + 2, j + 1),
                    format!("`{field}` is not a number"),
                )
            })?;
            data.push(v);
        }
        horizon += 1;
    }
    // data is row-major over time: a width × T column-major matrix
    let all = DMatrix::from_vec(width, horizon, data);
    let mut out = Vec::with_capacity(groups.len());
    let mut row = 0;
    for (name, count) in groups {
        out.push((name, all.rows(row, count).into_owned()));
        row += count;
    }
    Ok(out)
}

const BASE_GROUPS: [&str; 5] = ["u", "pi", "v", "x", "y"];

fn trajectory_groups(traj: &Trajectory) -> Vec<(&str, &DMatrix<f64>)> {
    let mut groups = vec![
        ("u", &traj.u),
        ("pi", &traj.pi),
        ("v", &traj.v),
        ("x", &traj.x),
        ("y", &traj.y),
    ];
    groups.extend(traj.extra.iter().map(|(k, v)| (k.as_str(), v)));
    groups
}

/// Trajectory CSV: `t, u_*, pi_*, v_*, x_*, y_*` followed by any attached
/// derived processes.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = std::io::BufWriter::new(fs::File::create(path)?);
    write_csv(file, &trajectory_groups(traj))
}

/// Reads a trajectory CSV. Absent groups are empty; seeds are not stored
/// in CSV and read back as the defaults.
pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let groups = read_csv(std::io::BufReader::new(fs::File::open(path)?)).map_err(|e| with_file(path, e))?;
    let horizon = groups.first().map_or(0, |(_, m)| m.ncols());
    let mut base: BTreeMap<&str, DMatrix<f64>> = BTreeMap::new();
    let mut extra = BTreeMap::new();
    for (name, m) in groups {
        match BASE_GROUPS.iter().find(|g| **g == name) {
            Some(g) => {
                base.insert(g, m);
            }
            None => {
                extra.insert(name, m);
            }
        }
    }
    let mut take = |g: &str| base.remove(g).unwrap_or_else(|| DMatrix::zeros(0, horizon));
    Ok(Trajectory {
        u: take("u"),
        pi: take("pi"),
        v: take("v"),
        x: take("x"),
        y: take("y"),
        seeds: Seeds::default(),
        burn_in: 0,
        extra,
    })
}

pub const BINARY_MAGIC: &[u8; 8] = b"GLSSTRJ1";
pub const BINARY_HEADER_LEN: usize = 64;
const FLAG_HAS_V: u32 = 1;

/// Raw little-endian trajectory: a 64-byte header (magic, `n_u`, `p`,
/// `n_n`, `n_x`, `n_y` as u32, flags as u32, `T` as u64, three u64 seeds)
/// followed by one record `u, π, v, x, y` of f64 per time step. The noise
/// block is omitted when flag bit 0 is clear.
pub fn encode_trajectory(traj: &Trajectory, include_noise: bool) -> Vec<u8> {
    let horizon = traj.len();
    let (nu, p, nn, nx, ny) = (
        traj.u.nrows(),
        traj.pi.nrows(),
        traj.v.nrows(),
        traj.x.nrows(),
        traj.y.nrows(),
    );
    let per = nu + p + if include_noise { nn } else { 0 } + nx + ny;
    let mut buf = Vec::with_capacity(BINARY_HEADER_LEN + 8 * per * horizon);
    buf.extend_from_slice(BINARY_MAGIC);
    for d in [nu, p, nn, nx, ny] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let flags = if include_noise { FLAG_HAS_V } else { 0 };
    buf.extend_from_slice(&flags.to_le_bytes());
    buf.extend_from_slice(&(horizon as u64).to_le_bytes());
    for s in [traj.seeds.switching, traj.seeds.input, traj.seeds.noise] {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    debug_assert_eq!(buf.len(), BINARY_HEADER_LEN);
    for t in 0..horizon {
        let mut put = |m: &DMatrix<f64>| {
            for v in m.column(t).iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        };
        put(&traj.u);
        put(&traj.pi);
        if include_noise {
            put(&traj.v);
        }
        put(&traj.x);
        put(&traj.y);
    }
    buf
}

/// Inverse of [`encode_trajectory`]. Without the noise block `v` is empty.
pub fn decode_trajectory(bytes: &[u8]) -> Result<Trajectory> {
    let bad = |msg: String| GlssError::format("binary trajectory", msg);
    if bytes.len() < BINARY_HEADER_LEN {
        return Err(bad(format!("{} bytes, shorter than the header", bytes.len())));
    }
    if &bytes[..8] != BINARY_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (nu, p, nn, nx, ny) = (u32_at(8), u32_at(12), u32_at(16), u32_at(20), u32_at(24));
    let flags = u32_at(28) as u32;
    if flags & !FLAG_HAS_V != 0 {
        return Err(bad(format!("unknown flags {flags:#x}")));
    }
    let has_v = flags & FLAG_HAS_V != 0;
    let horizon = usize::try_from(u64_at(32)).map_err(|_| bad("length overflows".into()))?;
    let seeds = Seeds {
        switching: u64_at(40),
        input: u64_at(48),
        noise: u64_at(56),
    };
    let nv = if has_v { nn } else { 0 };
    let per = nu + p + nv + nx + ny;
    let expected = per
        .checked_mul(horizon)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(BINARY_HEADER_LEN))
        .ok_or_else(|| bad("length overflows".into()))?;
    if bytes.len() != expected {
        return Err(bad(format!("{} bytes, expected {expected}", bytes.len())));
    }
    let mut mats = [nu, p, nv, nx, ny].map(|r| DMatrix::<f64>::zeros(r, horizon));
    let mut o = BINARY_HEADER_LEN;
    for t in 0..horizon {
        for m in mats.iter_mut() {
            for i in 0..m.nrows() {
                m[(i, t)] = f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
                o += 8;
            }
        }
    }
    let [u, pi, v, x, y] = mats;
    Ok(Trajectory {
        u,
        pi,
        v,
        x,
        y,
        seeds,
        burn_in: 0,
        extra: BTreeMap::new(),
    })
}

pub fn write_trajectory_bin(path: &Path, traj: &Trajectory) -> Result<()> {
    fs::write(path, encode_trajectory(traj, true))?;
    Ok(())
}

pub fn read_trajectory_bin(path: &Path) -> Result<Trajectory> {
    decode_trajectory(&fs::read(path)?).map_err(|e| with_file(path, e))
}

/// Reads a trajectory by extension: `.bin` binary, anything else CSV.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_trajectory_bin(path),
        _ => read_trajectory_csv(path),
    }
}
