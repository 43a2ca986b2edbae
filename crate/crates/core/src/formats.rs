//! Little-endian binary formats. Every file is `header | payload | u64
//! checksum`, the checksum being 64-bit FNV-1a over header and payload.
//!
//! * Shard (`PGPC`): `u32 version, u32 shape_count, u32 points_per_shape,
//!   u64 first_shape_index`, then `shape_count * points_per_shape * 3` f32.
//! * Patch file (`PGPT`): `u32 version, u32 num_patches, u32 group_size,
//!   u64 shape_index`, then centers (`n*3` f32), center-relative groups
//!   (`n*k*3` f32), center indices (`n` u32) and mask (`n` u8).
//! * Point-set file (`PGPS`): `u32 version, u32 set_count, u32 reserved,
//!   u64 total_points`, then `set_count` u32 point counts and
//!   `total_points * 3` f32.

use std::hash::Hasher;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pointops::PatchSet;
use crate::primitives::Vec3;

pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;
pub const FOOTER_LEN: usize = 8;

pub const SHARD_MAGIC: [u8; 4] = *b"PGPC";
pub const PATCH_MAGIC: [u8; 4] = *b"PGPT";
pub const POINT_SET_MAGIC: [u8; 4] = *b"PGPS";

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// The three u32 fields and the u64 field following the magic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Header {
    magic: [u8; 4],
    a: u32,
    b: u32,
    c: u32,
    d: u64,
}

impl Header {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.magic);
        out.extend_from_slice(&self.a.to_le_bytes());
        out.extend_from_slice(&self.b.to_le_bytes());
        out.extend_from_slice(&self.c.to_le_bytes());
        out.extend_from_slice(&self.d.to_le_bytes());
    }
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(b[off..off + 8].try_into().unwrap())
}

fn f32_at(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn seal(mut bytes: Vec<u8>) -> Vec<u8> {
    let sum = fnv1a64(&bytes);
    bytes.extend_from_slice(&sum.to_le_bytes());
    bytes
}

/// Checks length, magic, version and checksum; returns the header and the
/// payload slice.
fn open<'a>(bytes: &'a [u8], magic: [u8; 4], path: &Path) -> Result<(Header, &'a [u8])> {
    if bytes.len() < HEADER_LEN + FOOTER_LEN {
        return Err(Error::corrupt(path, format!("file too short ({} bytes)", bytes.len())));
    }
    let (body, footer) = bytes.split_at(bytes.len() - FOOTER_LEN);
    let stored = u64_at(footer, 0);
    let actual = fnv1a64(body);
    if stored != actual {
        return Err(Error::corrupt(
            path,
            format!("checksum mismatch (stored {stored:016x}, computed {actual:016x})"),
        ));
    }
    if body[..4] != magic {
        return Err(Error::corrupt(path, format!("bad magic {:?}", &body[..4])));
    }
    let header = Header {
        magic,
        a: u32_at(body, 4),
        b: u32_at(body, 8),
        c: u32_at(body, 12),
        d: u64_at(body, 16),
    };
    if header.a != FORMAT_VERSION {
        return Err(Error::corrupt(path, format!("unsupported format version {}", header.a)));
    }
    Ok((header, &body[HEADER_LEN..]))
}

fn push_f32s(out: &mut Vec<u8>, points: impl IntoIterator<Item = Vec3>) {
    for p in points {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
}

fn read_points(b: &[u8], count: usize) -> Vec<Vec3> {
    (0..count)
        .map(|i| {
            let o = i * 12;
            Vec3::new(f32_at(b, o) as f64, f32_at(b, o + 4) as f64, f32_at(b, o + 8) as f64)
        })
        .collect()
}

/// Peeks at the 4-byte magic of a file's contents.
pub fn magic_of(bytes: &[u8]) -> Option<[u8; 4]> {
    bytes.get(..4).map(|m| m.try_into().unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardHeader {
    pub shape_count: u32,
    pub points_per_shape: u32,
    pub first_shape_index: u64,
}

impl ShardHeader {
    pub fn payload_len(&self) -> usize {
        self.shape_count as usize * self.points_per_shape as usize * 12
    }

    pub fn file_len(&self) -> usize {
        HEADER_LEN + self.payload_len() + FOOTER_LEN
    }
}

/// Encodes one shape's points as the f32 payload bytes of a shard.
pub fn encode_shape_payload(points: &[Vec3]) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * 12);
    push_f32s(&mut out, points.iter().copied());
    out
}

/// Assembles a shard file from per-shape payloads (see [`encode_shape_payload`]).
pub fn encode_shard(header: &ShardHeader, shape_payloads: &[Vec<u8>]) -> Result<Vec<u8>> {
    let per_shape = header.points_per_shape as usize * 12;
    if shape_payloads.len() != header.shape_count as usize || shape_payloads.iter().any(|p| p.len() != per_shape) {
        return Err(Error::Validation("shard payload does not match its header".into()));
    }
    let mut out = Vec::with_capacity(header.file_len());
    Header {
        magic: SHARD_MAGIC,
        a: FORMAT_VERSION,
        b: header.shape_count,
        c: header.points_per_shape,
        d: header.first_shape_index,
    }
    .encode(&mut out);
    for p in shape_payloads {
        out.extend_from_slice(p);
    }
    Ok(seal(out))
}

/// A verified shard held in memory.
#[derive(Debug, Clone)]
pub struct Shard {
    pub header: ShardHeader,
    payload: Vec<u8>,
}

impl Shard {
    pub fn decode(bytes: &[u8], path: &Path) -> Result<Shard> {
        let (h, payload) = open(bytes, SHARD_MAGIC, path)?;
        let header = ShardHeader {
            shape_count: h.b,
            points_per_shape: h.c,
            first_shape_index: h.d,
        };
        if payload.len() != header.payload_len() {
            return Err(Error::corrupt(
                path,
                format!("payload is {} bytes, header implies {}", payload.len(), header.payload_len()),
            ));
        }
        Ok(Shard {
            header,
            payload: payload.to_vec(),
        })
    }

    pub fn read(path: &Path) -> Result<Shard> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, path)
    }

    /// Points of the shape at `local` offset within the shard.
    pub fn shape(&self, local: usize) -> Vec<Vec3> {
        let n = self.header.points_per_shape as usize;
        read_points(&self.payload[local * n * 12..], n)
    }

    pub fn shapes(&self) -> Vec<Vec<Vec3>> {
        (0..self.header.shape_count as usize).map(|i| self.shape(i)).collect()
    }
}

/// Encodes a patch set as a patch file.
pub fn encode_patch_file(patches: &PatchSet, shape_index: u64) -> Vec<u8> {
    let n = patches.num_patches();
    let k = patches.group_size();
    let mut out = Vec::new();
    Header {
        magic: PATCH_MAGIC,
        a: FORMAT_VERSION,
        b: n as u32,
        c: k as u32,
        d: shape_index,
    }
    .encode(&mut out);
    push_f32s(&mut out, patches.centers.iter().copied());
    push_f32s(&mut out, patches.groups.iter().flatten().copied());
    for &i in &patches.center_indices {
        out.extend_from_slice(&(i as u32).to_le_bytes());
    }
    out.extend(patches.mask.iter().map(|&m| m as u8));
    seal(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchFile {
    pub shape_index: u64,
    pub centers: Vec<Vec3>,
    pub groups: Vec<Vec<Vec3>>,
    pub center_indices: Vec<u32>,
    pub mask: Vec<bool>,
}

pub fn decode_patch_file(bytes: &[u8], path: &Path) -> Result<PatchFile> {
    let (h, payload) = open(bytes, PATCH_MAGIC, path)?;
    let (n, k) = (h.b as usize, h.c as usize);
    let expected = n * 12 + n * k * 12 + n * 4 + n;
    if payload.len() != expected {
        return Err(Error::corrupt(path, format!("payload is {} bytes, expected {expected}", payload.len())));
    }
    let centers = read_points(payload, n);
    let flat = read_points(&payload[n * 12..], n * k);
    let groups = flat.chunks(k.max(1)).map(<[Vec3]>::to_vec).take(n).collect();
    let idx_off = n * 12 + n * k * 12;
    let center_indices = (0..n).map(|i| u32_at(payload, idx_off + 4 * i)).collect();
    let mask = payload[idx_off + 4 * n..].iter().map(|&b| b != 0).collect();
    Ok(PatchFile {
        shape_index: h.d,
        centers,
        groups,
        center_indices,
        mask,
    })
}

/// Encodes a list of point sets (possibly of different sizes).
pub fn encode_point_sets(sets: &[Vec<Vec3>]) -> Vec<u8> {
    let total: usize = sets.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * sets.len() + total * 12 + FOOTER_LEN);
    Header {
        magic: POINT_SET_MAGIC,
        a: FORMAT_VERSION,
        b: sets.len() as u32,
        c: 0,
        d: total as u64,
    }
    .encode(&mut out);
    for s in sets {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    }
    push_f32s(&mut out, sets.iter().flatten().copied());
    seal(out)
}

pub fn decode_point_sets(bytes: &[u8], path: &Path) -> Result<Vec<Vec<Vec3>>> {
    let (h, payload) = open(bytes, POINT_SET_MAGIC, path)?;
    let count = h.b as usize;
    if payload.len() < 4 * count {
        return Err(Error::corrupt(path, "truncated set counts"));
    }
    let counts: Vec<usize> = (0..count).map(|i| u32_at(payload, 4 * i) as usize).collect();
    let total: usize = counts.iter().sum();
    if total as u64 != h.d || payload.len() != 4 * count + total * 12 {
        return Err(Error::corrupt(path, "point counts do not match payload"));
    }
    let mut off = 4 * count;
    Ok(counts
        .into_iter()
        .map(|c| {
            let pts = read_points(&payload[off..], c);
            off += c * 12;
            pts
        })
        .collect())
}

/// Reads a file of point sets: a point-set file, a shard (one set per
/// shape) or whitespace-separated `x y z` text (a single set).
pub fn read_point_sets(path: &Path) -> Result<Vec<Vec<Vec3>>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match magic_of(&bytes) {
        Some(POINT_SET_MAGIC) => decode_point_sets(&bytes, path),
        Some(SHARD_MAGIC) => Ok(Shard::decode(&bytes, path)?.shapes()),
        _ => {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::corrupt(path, "neither a binary point-set file nor UTF-8 text"))?;
            Ok(vec![parse_xyz(&text).map_err(|e| Error::corrupt(path, e))?])
        }
    }
}

/// Parses `x y z` lines; blank lines and `#` comments are skipped.
pub fn parse_xyz(text: &str) -> std::result::Result<Vec<Vec3>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(no, line)| {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| format!("line {}: {e}", no + 1))?;
            match vals[..] {
                [x, y, z] => Ok(Vec3::new(x, y, z)),
                _ => Err(format!("line {}: expected 3 values, got {}", no + 1, vals.len())),
            }
        })
        .collect()
}

/// Writes points as `x y z` lines, using the shortest representation that
/// round-trips.
pub fn write_xyz<W: std::io::Write>(points: &[Vec3], mut out: W) -> std::io::Result<()> {
    for p in points {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn shard_layout_is_exact() {
        let pts = vec![Vec3::new(1.0, -2.0, 0.5); 4];
        let header = ShardHeader {
            shape_count: 2,
            points_per_shape: 4,
            first_shape_index: 1024,
        };
        let payloads = vec![encode_shape_payload(&pts), encode_shape_payload(&pts)];
        let bytes = encode_shard(&header, &payloads).unwrap();
        assert_eq!(bytes.len(), 24 + 2 * 4 * 12 + 8);
        assert_eq!(&bytes[..4], b"PGPC");
        assert_eq!(u32_at(&bytes, 4), 1);
        assert_eq!(u32_at(&bytes, 8), 2);
        assert_eq!(u32_at(&bytes, 12), 4);
        assert_eq!(u64_at(&bytes, 16), 1024);
        assert_eq!(f32_at(&bytes, 24), 1.0);
        assert_eq!(f32_at(&bytes, 28), -2.0);
        assert_eq!(u64_at(&bytes, bytes.len() - 8), fnv1a64(&bytes[..bytes.len() - 8]));
        let shard = Shard::decode(&bytes, path()).unwrap();
        assert_eq!(shard.header, header);
        assert_eq!(shard.shape(1), pts);
    }

    #[test]
    fn every_single_byte_flip_is_detected() {
        let header = ShardHeader {
            shape_count: 1,
            points_per_shape: 3,
            first_shape_index: 0,
        };
        let bytes = encode_shard(&header, &[encode_shape_payload(&[Vec3::new(0.1, 0.2, 0.3); 3])]).unwrap();
        for i in 0..bytes.len() {
            let mut bad = bytes.clone();
            bad[i] ^= 0x40;
            assert!(matches!(Shard::decode(&bad, path()), Err(Error::Corruption { .. })), "byte {i}");
        }
    }

    #[test]
    fn patch_file_round_trip() {
        let pts: Vec<Vec3> = (0..20).map(|i| Vec3::new(i as f64 * 0.25, 0.0, 1.0)).collect();
        let set = crate::pointops::knn_group(&pts, &[0, 7, 19], 4).unwrap();
        let set = crate::pointops::random_mask(&set, 0.34, 1).unwrap();
        let back = decode_patch_file(&encode_patch_file(&set, 77), path()).unwrap();
        assert_eq!(back.shape_index, 77);
        assert_eq!(back.centers, set.centers);
        assert_eq!(back.groups, set.groups);
        assert_eq!(back.center_indices, vec![0, 7, 19]);
        assert_eq!(back.mask, set.mask);
    }

    #[test]
    fn xyz_parsing() {
        assert_eq!(parse_xyz("1 2 3\n\n# c\n4 5 6\n").unwrap().len(), 2);
        assert!(parse_xyz("1 2\n").is_err());
        assert!(parse_xyz("1 2 x\n").is_err());
    }

    proptest! {
        #[test]
        fn point_sets_round_trip(sets in prop::collection::vec(
            prop::collection::vec(prop::array::uniform3(-10.0f32..10.0), 0..20), 0..6)
        ) {
            let sets: Vec<Vec<Vec3>> = sets
                .iter()
                .map(|s| s.iter().map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)).collect())
                .collect();
            let back = decode_point_sets(&encode_point_sets(&sets), path()).unwrap();
            prop_assert_eq!(back, sets);
        }
    }
}
