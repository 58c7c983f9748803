//! Minimal NRRD reader/writer: 3-D, raw encoding, little endian, attached header.
//!
//! Supported pixel types are `int16`, `uint8` and `float32`. Spacing comes from
//! either `spacings:` or a diagonal `space directions:` field.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Dims, RoiMask, ScalarVolume, Spacing};

/// On-disk pixel type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrrdType {
    Int16,
    Uint8,
    Float32,
}

impl NrrdType {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "short" | "short int" | "signed short" | "signed short int" | "int16" | "int16_t" => {
                Some(NrrdType::Int16)
            }
            "uchar" | "unsigned char" | "uint8" | "uint8_t" => Some(NrrdType::Uint8),
            "float" | "float32" => Some(NrrdType::Float32),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            NrrdType::Int16 => "int16",
            NrrdType::Uint8 => "uint8",
            NrrdType::Float32 => "float",
        }
    }

    fn width(self) -> usize {
        match self {
            NrrdType::Int16 => 2,
            NrrdType::Uint8 => 1,
            NrrdType::Float32 => 4,
        }
    }
}

/// Decoded NRRD contents before interpretation as volume or mask.
#[derive(Debug, Clone)]
pub struct NrrdImage {
    pub dims: Dims,
    pub spacing: Spacing,
    pub pixel_type: NrrdType,
    pub values: Vec<f64>,
}

impl NrrdImage {
    pub fn into_volume(self) -> Result<ScalarVolume> {
        ScalarVolume::new(self.dims, self.spacing, self.values)
    }

    /// Interpret as a mask; only `uint8` data holding 0/1 qualifies.
    pub fn into_mask(self) -> Result<RoiMask> {
        if self.pixel_type != NrrdType::Uint8 {
            return Err(Error::invalid(
                "mask",
                format!("mask data must be uint8, found {}", self.pixel_type.name()),
            ));
        }
        let bits = self
            .values
            .iter()
            .map(|&v| match v as u8 {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::invalid("mask", format!("mask value {other} not in {{0,1}}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        RoiMask::new(self.dims, bits)
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Read and decode an NRRD file.
pub fn read_nrrd(path: impl AsRef<Path>) -> Result<NrrdImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(path, &bytes)
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<ScalarVolume> {
    read_nrrd(path)?.into_volume()
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<RoiMask> {
    read_nrrd(path)?.into_mask()
}

fn parse_floats(path: &Path, line: &str, s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format_err(path, format!("bad number {t:?} in header line {line:?}")))
        })
        .collect()
}

fn parse_space_directions(path: &Path, line: &str, s: &str) -> Result<[f64; 3]> {
    let vectors: Vec<&str> = s
        .split(')')
        .map(|t| t.trim().trim_start_matches('('))
        .filter(|t| !t.is_empty())
        .collect();
    if vectors.len() != 3 {
        return Err(format_err(path, format!("expected 3 direction vectors in {line:?}")));
    }
    let mut spacing = [0.0; 3];
    for (axis, v) in vectors.iter().enumerate() {
        let comps = parse_floats(path, line, &v.replace(',', " "))?;
        if comps.len() != 3 {
            return Err(format_err(path, format!("direction vector {v:?} in {line:?}")));
        }
        for (j, &c) in comps.iter().enumerate() {
            if j != axis && c != 0.0 {
                return Err(format_err(
                    path,
                    format!("non-diagonal space directions unsupported: {line:?}"),
                ));
            }
        }
        spacing[axis] = comps[axis].abs();
    }
    Ok(spacing)
}

fn decode(path: &Path, bytes: &[u8]) -> Result<NrrdImage> {
    let mut pos = 0usize;
    let mut next_line = || -> Option<String> {
        if pos >= bytes.len() {
            return None;
        }
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(bytes.len(), |i| pos + i);
        let line = String::from_utf8_lossy(&bytes[pos..end])
            .trim_end_matches('\r')
            .to_string();
        pos = (end + 1).min(bytes.len() + 1);
        Some(line)
    };

    let magic = next_line().ok_or_else(|| format_err(path, "empty file"))?;
    if !magic.starts_with("NRRD000") {
        return Err(format_err(path, format!("missing NRRD magic, found {magic:?}")));
    }

    let mut dimension = None;
    let mut pixel_type = None;
    let mut encoding_ok = false;
    let mut endian_little = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut spacing: Option<[f64; 3]> = None;

    loop {
        let line = next_line().ok_or_else(|| format_err(path, "header not terminated by blank line"))?;
        if line.is_empty() {
            break;
        }
        if line.starts_with('#') {
            continue;
        }
        // key:=value pairs carry free-form metadata
        if line.contains(":=") {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| format_err(path, format!("malformed header line {line:?}")))?;
        let value = value.trim();
        match key.trim() {
            "dimension" => {
                if value != "3" {
                    return Err(format_err(path, format!("unsupported dimension in {line:?}")));
                }
                dimension = Some(3);
            }
            "type" => {
                pixel_type = Some(NrrdType::parse(value).ok_or_else(|| {
                    format_err(path, format!("unsupported type in {line:?}"))
                })?);
            }
            "encoding" => {
                if value != "raw" {
                    return Err(format_err(path, format!("unsupported encoding in {line:?}")));
                }
                encoding_ok = true;
            }
            "endian" => match value {
                "little" => endian_little = Some(true),
                _ => return Err(format_err(path, format!("unsupported endian in {line:?}"))),
            },
            "sizes" => {
                let s = value
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| format_err(path, format!("bad sizes in {line:?}")))?;
                if s.len() != 3 || s.contains(&0) {
                    return Err(format_err(path, format!("need 3 positive sizes in {line:?}")));
                }
                sizes = Some(s);
            }
            "spacings" => {
                let s = parse_floats(path, &line, value)?;
                if s.len() != 3 {
                    return Err(format_err(path, format!("need 3 spacings in {line:?}")));
                }
                spacing = Some([s[0], s[1], s[2]]);
            }
            "space directions" => {
                spacing = Some(parse_space_directions(path, &line, value)?);
            }
            // geometry and labelling fields that carry no information we use
            "space" | "space origin" | "kinds" | "content" | "space units" => {}
            _ => return Err(format_err(path, format!("unsupported field in {line:?}"))),
        }
    }

    if dimension.is_none() {
        return Err(format_err(path, "missing \"dimension: 3\""));
    }
    let pixel_type = pixel_type.ok_or_else(|| format_err(path, "missing \"type:\""))?;
    if !encoding_ok {
        return Err(format_err(path, "missing \"encoding: raw\""));
    }
    if pixel_type.width() > 1 && endian_little.is_none() {
        return Err(format_err(path, "missing \"endian: little\""));
    }
    let sizes = sizes.ok_or_else(|| format_err(path, "missing \"sizes:\""))?;
    let spacing = spacing.ok_or_else(|| format_err(path, "missing \"spacings:\" or \"space directions:\""))?;
    let spacing = Spacing::new(spacing[0], spacing[1], spacing[2]);
    spacing
        .validate()
        .map_err(|e| format_err(path, e.to_string()))?;

    let dims = Dims::new(sizes[0], sizes[1], sizes[2]);
    let expected = dims.len() * pixel_type.width();
    let payload = if pos <= bytes.len() { &bytes[pos..] } else { &[][..] };
    if payload.len() != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: payload.len(),
        });
    }

    let values: Vec<f64> = match pixel_type {
        NrrdType::Uint8 => payload.iter().map(|&b| b as f64).collect(),
        NrrdType::Int16 => payload
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64)
            .collect(),
        NrrdType::Float32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
    };

    Ok(NrrdImage {
        dims,
        spacing,
        pixel_type,
        values,
    })
}

fn header(dims: Dims, spacing: Spacing, ty: NrrdType) -> String {
    format!(
        "NRRD0004\n\
         # radcompat\n\
         type: {}\n\
         dimension: 3\n\
         sizes: {} {} {}\n\
         spacings: {} {} {}\n\
         encoding: raw\n\
         endian: little\n\n",
        ty.name(),
        dims.nx,
        dims.ny,
        dims.nz,
        spacing.sx,
        spacing.sy,
        spacing.sz
    )
}

fn write_bytes(path: &Path, head: String, payload: Vec<u8>) -> Result<()> {
    let mut out = head.into_bytes();
    out.extend_from_slice(&payload);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write a volume as `float32`.
pub fn write_volume(v: &ScalarVolume, path: impl AsRef<Path>) -> Result<()> {
    write_volume_as(v, path, NrrdType::Float32)
}

/// Write a volume with an explicit pixel type. Values must be representable.
pub fn write_volume_as(v: &ScalarVolume, path: impl AsRef<Path>, ty: NrrdType) -> Result<()> {
    let path = path.as_ref();
    let mut payload = Vec::with_capacity(v.voxels().len() * ty.width());
    for (i, &x) in v.voxels().iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::invalid("volume", format!("non-finite intensity at voxel {i}")));
        }
        match ty {
            NrrdType::Float32 => {
                let f = x as f32;
                if !f.is_finite() {
                    return Err(Error::invalid(
                        "volume",
                        format!("intensity {x} at voxel {i} overflows float32"),
                    ));
                }
                payload.extend_from_slice(&f.to_le_bytes());
            }
            NrrdType::Int16 => {
                if x.fract() != 0.0 || x < i16::MIN as f64 || x > i16::MAX as f64 {
                    return Err(Error::invalid(
                        "volume",
                        format!("intensity {x} at voxel {i} not representable as int16"),
                    ));
                }
                payload.extend_from_slice(&(x as i16).to_le_bytes());
            }
            NrrdType::Uint8 => {
                if x.fract() != 0.0 || !(0.0..=255.0).contains(&x) {
                    return Err(Error::invalid(
                        "volume",
                        format!("intensity {x} at voxel {i} not representable as uint8"),
                    ));
                }
                payload.push(x as u8);
            }
        }
    }
    write_bytes(path, header(v.dims(), v.spacing(), ty), payload)
}

/// Write a mask as `uint8` 0/1. Masks carry no spacing of their own.
pub fn write_mask(m: &RoiMask, spacing: Spacing, path: impl AsRef<Path>) -> Result<()> {
    spacing.validate()?;
    let payload = m.bits().iter().map(|&b| b as u8).collect();
    write_bytes(path.as_ref(), header(m.dims(), spacing, NrrdType::Uint8), payload)
}
