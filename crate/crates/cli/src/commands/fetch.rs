//! `sgcl fetch-data`: download, verify, extract, and cache a ratings archive.

use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use sha2::{Digest, Sha256};

use crate::config::{FetchSection, Overrides, RunConfig};

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Archive URL; defaults to the MovieLens-100K release.
    #[arg(long)]
    pub url: Option<String>,
    /// Required hex digest of the archive. Fetching refuses to run without
    /// a pin from this flag or the config's `fetch.sha256`.
    #[arg(long)]
    pub sha256: Option<String>,
    /// Directory the extracted ratings file is cached in.
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Archive member to extract.
    #[arg(long)]
    pub member: Option<String>,
}

impl FetchArgs {
    pub fn merged(&self, base: &FetchSection) -> FetchSection {
        FetchSection {
            url: self.url.clone().unwrap_or_else(|| base.url.clone()),
            cache_dir: self
                .cache_dir
                .clone()
                .unwrap_or_else(|| base.cache_dir.clone()),
            sha256: self.sha256.clone().or_else(|| base.sha256.clone()),
            member: self.member.clone().unwrap_or_else(|| base.member.clone()),
        }
    }
}

/// Path the extracted member lands at: the member's file name inside the
/// cache directory.
pub fn cached_path(fetch: &FetchSection) -> Result<PathBuf> {
    let name = Path::new(&fetch.member)
        .file_name()
        .with_context(|| format!("fetch.member {:?} has no file name", fetch.member))?;
    Ok(fetch.cache_dir.join(name))
}

fn extract_member(archive_bytes: &[u8], member: &str) -> Result<Vec<u8>> {
    let mut archive =
        zip::ZipArchive::new(Cursor::new(archive_bytes)).context("reading downloaded archive")?;
    let mut file = archive
        .by_name(member)
        .with_context(|| format!("archive has no member {member:?}"))?;
    let mut contents = Vec::with_capacity(file.size() as usize);
    file.read_to_end(&mut contents)
        .with_context(|| format!("decompressing {member:?}"))?;
    Ok(contents)
}

pub fn fetch(fetch: &FetchSection) -> Result<PathBuf> {
    let target = cached_path(fetch)?;
    if target.exists() {
        println!("cached: {}", target.display());
        return Ok(target);
    }

    let pinned = fetch.sha256.as_deref().with_context(|| {
        format!(
            "no pinned checksum for {}; pass --sha256 or set fetch.sha256 \
             to the digest published for the archive",
            fetch.url
        )
    })?;
    let pinned = pinned.trim().to_ascii_lowercase();

    let response =
        reqwest::blocking::get(&fetch.url).with_context(|| format!("downloading {}", fetch.url))?;
    if !response.status().is_success() {
        bail!("downloading {}: HTTP {}", fetch.url, response.status());
    }
    let bytes = response
        .bytes()
        .with_context(|| format!("reading body of {}", fetch.url))?;

    let digest = hex::encode(Sha256::digest(&bytes));
    if digest != pinned {
        bail!(
            "checksum mismatch for {}: expected {pinned}, got {digest}; \
             cache left untouched",
            fetch.url
        );
    }

    let contents = extract_member(&bytes, &fetch.member)?;
    fs::create_dir_all(&fetch.cache_dir)
        .with_context(|| format!("creating cache dir {}", fetch.cache_dir.display()))?;
    let staging = target.with_extension("partial");
    fs::write(&staging, &contents).with_context(|| format!("writing {}", staging.display()))?;
    fs::rename(&staging, &target)
        .with_context(|| format!("moving into place at {}", target.display()))?;

    println!(
        "fetched {} ({} bytes, sha256 {digest}), extracted {} lines to {}",
        fetch.url,
        bytes.len(),
        contents.iter().filter(|&&b| b == b'\n').count(),
        target.display()
    );
    Ok(target)
}

pub fn run(cfg: &RunConfig, args: &FetchArgs) -> Result<()> {
    let section = args.merged(&cfg.fetch);
    fetch(&section)?;
    Ok(())
}
