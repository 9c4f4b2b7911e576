//! Binary file formats for trained models and decompositions, so expensive
//! fits can run once and be reused. All integers and floats are
//! little-endian; each format starts with a four-byte magic and a u32
//! version.
//!
//! `CFPC` — PCA model: dim u64, k u64, mean (dim f64), components (k*dim f64).
//!
//! `CFDC` — decomposition dump: source width/height u32, scale count u32,
//! then per scale {scale_index u32, band count u32, per band {rows u32,
//! cols u32, rows*cols interleaved (re f64, im f64)}}.
//!
//! `CFEM` — ensemble bundle: window parameters (width, height, scales,
//! angles, all u32), tie-break (tag u8 + u32), class labels (u32 count,
//! u64 each), class names (u32 count, length-prefixed UTF-8), then voters
//! (u32 count, each: key tag u8 + u32, scale u32, quantize bits u8 with 0
//! for none, embedded PCA model, classifier tag u8 with k-NN = 1 and
//! OAA-SVM = 2 followed by the classifier payload).

use std::fs;
use std::path::Path;

use curveface_core::ensemble::{
    ScaleEnsembleModel, TrainedClassifier, VoterEntry, VoterKey,
};
use curveface_core::fdct::{build_windows, CurveletDecomposition};
use curveface_core::knn::{KnnClassifier, LabeledSet, Metric};
use curveface_core::pca::PcaModel;
use curveface_core::svm::{BinarySvm, OaaSvm};

use crate::error::{Error, Result};

const PCA_MAGIC: &[u8; 4] = b"CFPC";
const DECOMP_MAGIC: &[u8; 4] = b"CFDC";
const ENSEMBLE_MAGIC: &[u8; 4] = b"CFEM";
const VERSION: u32 = 1;

// ---------------------------------------------------------------- writing

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(magic: &[u8; 4]) -> Self {
        let mut buf = Vec::with_capacity(64);
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        Writer { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

fn write_pca_into(w: &mut Writer, model: &PcaModel) {
    w.u64(model.dim() as u64);
    w.u64(model.k() as u64);
    w.f64s(model.mean());
    w.f64s(model.components_flat());
}

/// Serialize a PCA model to `path`.
pub fn write_pca(path: &Path, model: &PcaModel) -> Result<()> {
    let mut w = Writer::new(PCA_MAGIC);
    write_pca_into(&mut w, model);
    fs::write(path, w.buf).map_err(|e| Error::io(path, e))
}

/// Serialize a decomposition dump to `path`.
pub fn write_decomposition(path: &Path, coeffs: &CurveletDecomposition) -> Result<()> {
    let mut w = Writer::new(DECOMP_MAGIC);
    w.u32(coeffs.source_width as u32);
    w.u32(coeffs.source_height as u32);
    w.u32(coeffs.scales.len() as u32);
    for scale in &coeffs.scales {
        w.u32(scale.scale_index as u32);
        w.u32(scale.bands.len() as u32);
        for band in &scale.bands {
            w.u32(band.rows as u32);
            w.u32(band.cols as u32);
            for v in &band.values {
                w.f64(v.re);
                w.f64(v.im);
            }
        }
    }
    fs::write(path, w.buf).map_err(|e| Error::io(path, e))
}

fn write_classifier(w: &mut Writer, classifier: &TrainedClassifier) {
    match classifier {
        TrainedClassifier::Knn(knn) => {
            w.u8(1);
            w.u64(knn.k() as u64);
            match knn.metric() {
                Metric::Euclidean => w.u8(1),
                Metric::Gaussian { sigma } => {
                    w.u8(2);
                    w.f64(sigma);
                }
            }
            let set = knn.set();
            w.u64(set.len() as u64);
            w.u64(set.dim() as u64);
            for &label in set.labels() {
                w.u64(label as u64);
            }
            for point in set.points() {
                w.f64s(point);
            }
        }
        TrainedClassifier::Svm(svm) => {
            w.u8(2);
            w.u32(svm.classes().len() as u32);
            for &c in svm.classes() {
                w.u64(c as u64);
            }
            w.u64(svm.feature_mean().len() as u64);
            w.f64s(svm.feature_mean());
            w.f64s(svm.feature_scale());
            w.f64(svm.c());
            w.u32(svm.machines().len() as u32);
            for m in svm.machines() {
                w.f64s(&m.weights);
                w.f64(m.bias);
                w.u8(m.converged as u8);
            }
        }
    }
}

/// Serialize a trained ensemble with the subject names its labels map to.
pub fn write_ensemble(path: &Path, model: &ScaleEnsembleModel, names: &[String]) -> Result<()> {
    let mut w = Writer::new(ENSEMBLE_MAGIC);
    let windows = model.windows();
    w.u32(windows.width() as u32);
    w.u32(windows.height() as u32);
    w.u32(windows.num_scales() as u32);
    w.u32(windows.angles_coarse() as u32);

    match model.tie_break() {
        None => {
            w.u8(0);
            w.u32(0);
        }
        Some(VoterKey::Scale(s)) => {
            w.u8(1);
            w.u32(s as u32);
        }
        Some(VoterKey::BitDepth(b)) => {
            w.u8(2);
            w.u32(u32::from(b));
        }
    }

    w.u32(model.classes().len() as u32);
    for &c in model.classes() {
        w.u64(c as u64);
    }
    w.u32(names.len() as u32);
    for name in names {
        w.str(name);
    }

    w.u32(model.voters().len() as u32);
    for voter in model.voters() {
        match voter.key {
            VoterKey::Scale(s) => {
                w.u8(1);
                w.u32(s as u32);
            }
            VoterKey::BitDepth(b) => {
                w.u8(2);
                w.u32(u32::from(b));
            }
        }
        w.u32(voter.scale as u32);
        w.u8(voter.quantize_bits.unwrap_or(0));
        write_pca_into(&mut w, &voter.pca);
        write_classifier(&mut w, &voter.classifier);
    }

    fs::write(path, w.buf).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- reading

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn open(bytes: &'a [u8], magic: &[u8; 4], path: &'a Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        let found = r.take(4)?;
        if found != magic {
            return Err(r.err("wrong magic bytes"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(r.err(format!("unsupported version {version}")));
        }
        Ok(r)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::format(self.path, message)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(slice)
            }
            None => Err(self.err("truncated file")),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64_as_usize(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| self.err("length does not fit in usize"))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.err("invalid UTF-8 string"))
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.err(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

fn read_pca_from(r: &mut Reader) -> Result<PcaModel> {
    let dim = r.u64_as_usize()?;
    let k = r.u64_as_usize()?;
    let mean = r.f64s(dim)?;
    let components = r.f64s(k.checked_mul(dim).ok_or_else(|| r.err("pca size overflow"))?)?;
    PcaModel::from_parts(mean, components, k).map_err(Error::from)
}

/// Read a PCA model written by [`write_pca`].
pub fn read_pca(path: &Path) -> Result<PcaModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader::open(&bytes, PCA_MAGIC, path)?;
    let model = read_pca_from(&mut r)?;
    r.done()?;
    Ok(model)
}

fn read_classifier(r: &mut Reader) -> Result<TrainedClassifier> {
    match r.u8()? {
        1 => {
            let k = r.u64_as_usize()?;
            let metric = match r.u8()? {
                1 => Metric::Euclidean,
                2 => Metric::Gaussian { sigma: r.f64()? },
                other => return Err(r.err(format!("unknown metric tag {other}"))),
            };
            let n = r.u64_as_usize()?;
            let dim = r.u64_as_usize()?;
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                labels.push(r.u64_as_usize()?);
            }
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                points.push(r.f64s(dim)?);
            }
            let set = LabeledSet::new(points, labels)?;
            Ok(TrainedClassifier::Knn(KnnClassifier::new(set, k, metric)?))
        }
        2 => {
            let class_count = r.u32()? as usize;
            let mut classes = Vec::with_capacity(class_count);
            for _ in 0..class_count {
                classes.push(r.u64_as_usize()?);
            }
            let dim = r.u64_as_usize()?;
            let mean = r.f64s(dim)?;
            let scale = r.f64s(dim)?;
            let c = r.f64()?;
            let machine_count = r.u32()? as usize;
            let mut machines = Vec::with_capacity(machine_count);
            for _ in 0..machine_count {
                let weights = r.f64s(dim)?;
                let bias = r.f64()?;
                let converged = r.u8()? != 0;
                machines.push(BinarySvm { weights, bias, converged });
            }
            Ok(TrainedClassifier::Svm(OaaSvm::from_parts(classes, machines, mean, scale, c)?))
        }
        other => Err(r.err(format!("unknown classifier tag {other}"))),
    }
}

/// Read an ensemble bundle written by [`write_ensemble`]; windows are
/// rebuilt from their stored parameters.
pub fn read_ensemble(path: &Path) -> Result<(ScaleEnsembleModel, Vec<String>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader::open(&bytes, ENSEMBLE_MAGIC, path)?;

    let width = r.u32()? as usize;
    let height = r.u32()? as usize;
    let num_scales = r.u32()? as usize;
    let angles = r.u32()? as usize;

    let tie_break = match r.u8()? {
        0 => {
            r.u32()?;
            None
        }
        1 => Some(VoterKey::Scale(r.u32()? as usize)),
        2 => {
            let v = r.u32()?;
            Some(VoterKey::BitDepth(
                u8::try_from(v).map_err(|_| r.err("bit depth out of range"))?,
            ))
        }
        other => return Err(r.err(format!("unknown tie-break tag {other}"))),
    };

    let class_count = r.u32()? as usize;
    let mut classes = Vec::with_capacity(class_count);
    for _ in 0..class_count {
        classes.push(r.u64_as_usize()?);
    }
    let name_count = r.u32()? as usize;
    let mut names = Vec::with_capacity(name_count);
    for _ in 0..name_count {
        names.push(r.str()?);
    }

    let voter_count = r.u32()? as usize;
    let mut voters = Vec::with_capacity(voter_count);
    for _ in 0..voter_count {
        let key = match r.u8()? {
            1 => VoterKey::Scale(r.u32()? as usize),
            2 => {
                let v = r.u32()?;
                VoterKey::BitDepth(u8::try_from(v).map_err(|_| r.err("bit depth out of range"))?)
            }
            other => return Err(r.err(format!("unknown voter key tag {other}"))),
        };
        let scale = r.u32()? as usize;
        let quantize_bits = match r.u8()? {
            0 => None,
            b => Some(b),
        };
        let pca = read_pca_from(&mut r)?;
        let classifier = read_classifier(&mut r)?;
        voters.push(VoterEntry { key, scale, quantize_bits, pca, classifier });
    }
    r.done()?;

    let windows = build_windows(width, height, num_scales, angles)?;
    let model = ScaleEnsembleModel::from_parts(windows, voters, tie_break, classes)?;
    Ok((model, names))
}
