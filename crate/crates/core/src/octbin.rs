//! Self-describing binary container: `OCTB`, a little-endian u32 header
//! length, a UTF-8 JSON header, then f32 little-endian samples ordered
//! plane, row, column.

use std::path::Path;

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionCoefficients, DispersionProfile};
use crate::error::{Error, Result};
use crate::frame::{BScan, Domain, Scale, Spectrogram};
use crate::grid::GridSpec;

pub const MAGIC: &[u8; 4] = b"OCTB";
pub const DTYPE: &str = "f32le";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// Raw spectrograms, one plane per frame (rows are spectral samples).
    Spectrogram,
    /// Reconstructed B-scans, one plane per frame.
    Bscan,
    /// Channel stack of one frame, one plane per coefficient.
    Stack,
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub dims: [usize; 3],
    pub dtype: String,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial_pixel_um: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<DispersionCoefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<DispersionProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl Header {
    pub fn new(kind: Kind, dims: [usize; 3]) -> Self {
        Self {
            dims,
            dtype: DTYPE.into(),
            kind,
            scale: None,
            domain: None,
            axial_pixel_um: None,
            coefficients: Vec::new(),
            profile: None,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OctBin {
    pub header: Header,
    pub data: Array3<f32>,
}

impl OctBin {
    pub fn new(mut header: Header, data: Array3<f32>) -> Self {
        let (p, r, c) = data.dim();
        header.dims = [p, r, c];
        Self { header, data }
    }

    pub fn from_spectrograms(frames: &[Spectrogram], grid: Option<GridSpec>) -> Result<Self> {
        let first = frames.first().ok_or(Error::Empty("no frames"))?;
        let planes: Vec<_> = frames.iter().map(|f| (&f.data, f.domain)).collect();
        if planes.iter().any(|(_, d)| *d != first.domain) {
            return Err(Error::InvalidParameter("frames mix spectral domains".into()));
        }
        let data = stack_planes(planes.iter().map(|(d, _)| *d))?;
        let mut h = Header::new(Kind::Spectrogram, [0; 3]);
        h.domain = Some(first.domain);
        h.grid = grid;
        Ok(Self::new(h, data))
    }

    pub fn from_bscans(kind: Kind, frames: &[BScan]) -> Result<Self> {
        let first = frames.first().ok_or(Error::Empty("no frames"))?;
        if frames.iter().any(|f| f.scale != first.scale) {
            return Err(Error::Scale("frames mix linear and log scale".into()));
        }
        let data = stack_planes(frames.iter().map(|f| &f.pixels))?;
        let mut h = Header::new(kind, [0; 3]);
        h.scale = Some(first.scale);
        h.axial_pixel_um = Some(first.axial_pixel_um);
        Ok(Self::new(h, data))
    }

    pub fn planes(&self) -> usize {
        self.data.len_of(Axis(0))
    }

    pub fn plane(&self, i: usize) -> Array2<f64> {
        self.data.index_axis(Axis(0), i).mapv(f64::from)
    }

    pub fn to_spectrograms(&self) -> Result<Vec<Spectrogram>> {
        let domain = self
            .header
            .domain
            .ok_or_else(|| Error::Format("spectrogram file lacks a domain tag".into()))?;
        Ok((0..self.planes())
            .map(|i| Spectrogram::new(self.plane(i), domain))
            .collect())
    }

    pub fn to_bscans(&self) -> Result<Vec<BScan>> {
        if self.header.kind == Kind::Spectrogram {
            return Err(Error::Format("file holds spectrograms, not images".into()));
        }
        let scale = self.header.scale.unwrap_or(Scale::Linear);
        let pix = self.header.axial_pixel_um.unwrap_or(f64::NAN);
        Ok((0..self.planes())
            .map(|i| BScan {
                pixels: self.plane(i),
                scale,
                axial_pixel_um: pix,
            })
            .collect())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let len = u32::try_from(header.len()).map_err(|_| Error::Format("header too large".into()))?;
        let mut out = Vec::with_capacity(8 + header.len() + self.data.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.data.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic, not an OctBin file".into()));
        }
        let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let body = &bytes[8..];
        if body.len() < len {
            return Err(Error::Format(format!(
                "header length {len} exceeds the {} remaining bytes",
                body.len()
            )));
        }
        let header: Header = serde_json::from_slice(&body[..len])
            .map_err(|e| Error::Format(format!("header does not parse: {e}")))?;
        if header.dtype != DTYPE {
            return Err(Error::Format(format!("unsupported dtype {:?}", header.dtype)));
        }
        let [p, r, c] = header.dims;
        let expected = p
            .checked_mul(r)
            .and_then(|n| n.checked_mul(c))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Format("dims overflow".into()))?;
        let payload = &body[len..];
        if payload.len() != expected {
            return Err(Error::Format(format!(
                "payload is {} bytes, dims {:?} need {expected}",
                payload.len(),
                header.dims
            )));
        }
        let values: Vec<f32> = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let data = Array3::from_shape_vec((p, r, c), values)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { header, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

fn stack_planes<'a>(planes: impl Iterator<Item = &'a Array2<f64>>) -> Result<Array3<f32>> {
    let planes: Vec<_> = planes.collect();
    let (r, c) = planes[0].dim();
    let mut out = Array3::<f32>::zeros((planes.len(), r, c));
    for (i, p) in planes.iter().enumerate() {
        if p.dim() != (r, c) {
            return Err(Error::dims(format!("{:?}", (r, c)), format!("{:?}", p.dim())));
        }
        out.index_axis_mut(Axis(0), i).assign(&p.mapv(|v| v as f32));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_layout() {
        let data = Array3::from_shape_fn((2, 2, 3), |(p, r, c)| (p * 6 + r * 3 + c) as f32);
        let f = OctBin::new(Header::new(Kind::Stack, [0; 3]), data);
        let bytes = f.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"OCTB");
        let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&bytes[8..8 + len]).unwrap();
        assert_eq!(header["dims"], serde_json::json!([2, 2, 3]));
        assert_eq!(header["dtype"], "f32le");
        let payload = &bytes[8 + len..];
        assert_eq!(payload.len(), 48);
        // sample (1, 0, 2) is the ninth value
        assert_eq!(f32::from_le_bytes(payload[32..36].try_into().unwrap()), 8.0);
        assert_eq!(OctBin::from_bytes(&bytes).unwrap(), f);
    }

    #[test]
    fn rejects_corruption() {
        let f = OctBin::new(Header::new(Kind::Bscan, [0; 3]), Array3::zeros((1, 2, 2)));
        let bytes = f.to_bytes().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(OctBin::from_bytes(&bad), Err(Error::Format(_))));
        assert!(matches!(OctBin::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(OctBin::from_bytes(&long), Err(Error::Format(_))));
    }
}
