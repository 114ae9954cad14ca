//! C ABI over the `oppnet` library.
//!
//! Every function returns an [`OppnetStatus`]; on failure a description is
//! available from [`oppnet_last_error_message`] on the same thread.
//! Networks are opaque handles released with [`oppnet_network_free`].

use std::ffi::c_char;
use oppnet::electrophys::{classify_responses, probe_cell, CellId, OpponencyClass};
use oppnet::retinanet::{
    build_network, load_checkpoint, save_checkpoint, ArchitectureConfig, CheckpointMeta, LayerName,
    NetworkParameters,
};
use oppnet::sensitivity::hue_sensitivity;
use oppnet::stimuli::{build_hue_bank, hsl_to_rgb, hue_jacobian};
use oppnet::Error;
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OppnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    NonFinite = 4,
    UndefinedAtKink = 5,
    BadMagic = 6,
    UnsupportedVersion = 7,
    Truncated = 8,
    Metadata = 9,
    Dataset = 10,
    Io = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OppnetClass {
    Opponent = 0,
    NonOpponent = 1,
    Unresponsive = 2,
}

/// Mirror of the architecture description.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OppnetArchitecture {
    pub bottleneck_width: usize,
    pub ventral_depth: usize,
    pub input_channels: usize,
    pub base_channels: usize,
    pub kernel_size: usize,
    pub hidden_units: usize,
    pub num_classes: usize,
    pub input_size: usize,
}

impl From<&ArchitectureConfig> for OppnetArchitecture {
    fn from(c: &ArchitectureConfig) -> Self {
        OppnetArchitecture {
            bottleneck_width: c.bottleneck_width,
            ventral_depth: c.ventral_depth,
            input_channels: c.input_channels,
            base_channels: c.base_channels,
            kernel_size: c.kernel_size,
            hidden_units: c.hidden_units,
            num_classes: c.num_classes,
            input_size: c.input_size,
        }
    }
}

impl From<&OppnetArchitecture> for ArchitectureConfig {
    fn from(c: &OppnetArchitecture) -> Self {
        ArchitectureConfig {
            bottleneck_width: c.bottleneck_width,
            ventral_depth: c.ventral_depth,
            input_channels: c.input_channels,
            base_channels: c.base_channels,
            kernel_size: c.kernel_size,
            hidden_units: c.hidden_units,
            num_classes: c.num_classes,
            input_size: c.input_size,
        }
    }
}

/// Opaque network handle.
pub struct OppnetNetwork {
    params: NetworkParameters,
    meta: CheckpointMeta,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OppnetStatus {
    match e {
        Error::Shape(_) => OppnetStatus::Shape,
        Error::InvalidArgument(_) => OppnetStatus::InvalidArgument,
        Error::NonFinite(_) => OppnetStatus::NonFinite,
        Error::UndefinedAtKink(_) => OppnetStatus::UndefinedAtKink,
        Error::BadMagic => OppnetStatus::BadMagic,
        Error::UnsupportedVersion { .. } => OppnetStatus::UnsupportedVersion,
        Error::Truncated(_) => OppnetStatus::Truncated,
        Error::Metadata(_) => OppnetStatus::Metadata,
        Error::Dataset(_) => OppnetStatus::Dataset,
        Error::Io(_) => OppnetStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OppnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            OppnetStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            OppnetStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            OppnetStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn non_null_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn layer_arg(net: &OppnetNetwork, index: usize) -> Result<LayerName, Failure> {
    LayerName::from_conv_index(index)
        .filter(|l| net.params.config.has_layer(*l))
        .ok_or_else(|| Failure::Lib(Error::InvalidArgument(format!("no conv layer {index}"))))
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn oppnet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn oppnet_status_message(status: OppnetStatus) -> *const c_char {
    let s: &'static CStr = match status {
        OppnetStatus::Ok => c"ok",
        OppnetStatus::NullPointer => c"null pointer argument",
        OppnetStatus::InvalidArgument => c"invalid argument",
        OppnetStatus::Shape => c"shape mismatch",
        OppnetStatus::NonFinite => c"non-finite value",
        OppnetStatus::UndefinedAtKink => c"undefined at a hue sector boundary",
        OppnetStatus::BadMagic => c"bad checkpoint magic",
        OppnetStatus::UnsupportedVersion => c"unsupported checkpoint version",
        OppnetStatus::Truncated => c"truncated checkpoint",
        OppnetStatus::Metadata => c"invalid checkpoint metadata",
        OppnetStatus::Dataset => c"dataset error",
        OppnetStatus::Io => c"I/O error",
        OppnetStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// # Safety
/// `out` must point to writable memory for one `OppnetArchitecture`.
#[no_mangle]
pub unsafe extern "C" fn oppnet_architecture_default(out: *mut OppnetArchitecture) -> OppnetStatus {
    guard(|| {
        *non_null_mut(out, "out")? = (&ArchitectureConfig::default()).into();
        Ok(())
    })
}

/// Xavier-initialised network. On success `*out` owns a new handle.
///
/// # Safety
/// `arch` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oppnet_network_build(
    arch: *const OppnetArchitecture,
    seed: u64,
    out: *mut *mut OppnetNetwork,
) -> OppnetStatus {
    guard(|| {
        let config: ArchitectureConfig = non_null(arch, "arch")?.into();
        let out = non_null_mut(out, "out")?;
        let params = build_network(&config, seed)?;
        let meta = CheckpointMeta::untrained(config, seed);
        *out = Box::into_raw(Box::new(OppnetNetwork { params, meta }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oppnet_network_load(path: *const c_char, out: *mut *mut OppnetNetwork) -> OppnetStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = non_null_mut(out, "out")?;
        let (params, meta) = load_checkpoint(&path)?;
        *out = Box::into_raw(Box::new(OppnetNetwork { params, meta }));
        Ok(())
    })
}

/// # Safety
/// `net` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn oppnet_network_save(net: *const OppnetNetwork, path: *const c_char) -> OppnetStatus {
    guard(|| {
        let net = non_null(net, "net")?;
        save_checkpoint(&net.params, &net.meta, &path_arg(path)?)?;
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oppnet_network_free(net: *mut OppnetNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oppnet_network_architecture(
    net: *const OppnetNetwork,
    out: *mut OppnetArchitecture,
) -> OppnetStatus {
    guard(|| {
        *non_null_mut(out, "out")? = (&non_null(net, "net")?.params.config).into();
        Ok(())
    })
}

/// Number of conv layers; layer indices below are `0..count`.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oppnet_network_conv_layer_count(net: *const OppnetNetwork, out: *mut usize) -> OppnetStatus {
    guard(|| {
        *non_null_mut(out, "out")? = non_null(net, "net")?.params.config.conv_layer_count();
        Ok(())
    })
}

/// Output channels of conv layer `layer`.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oppnet_network_layer_channels(
    net: *const OppnetNetwork,
    layer: usize,
    out: *mut usize,
) -> OppnetStatus {
    guard(|| {
        let net = non_null(net, "net")?;
        let l = layer_arg(net, layer)?;
        *non_null_mut(out, "out")? = net.params.config.layer_channels(l).expect("checked");
        Ok(())
    })
}

/// HSL to RGB, writing three values to `rgb`.
///
/// # Safety
/// `rgb` must have room for three doubles.
#[no_mangle]
pub unsafe extern "C" fn oppnet_hsl_to_rgb(h: f64, s: f64, l: f64, rgb: *mut f64) -> OppnetStatus {
    guard(|| {
        let out = std::slice::from_raw_parts_mut(non_null_mut(rgb, "rgb")?, 3);
        out.copy_from_slice(&hsl_to_rgb(h, s, l));
        Ok(())
    })
}

/// d(R, G, B)/dh in per-degree units. Fails with
/// `OPPNET_STATUS_UNDEFINED_AT_KINK` at multiples of 60°.
///
/// # Safety
/// `out` must have room for three doubles.
#[no_mangle]
pub unsafe extern "C" fn oppnet_hue_jacobian(h: f64, s: f64, l: f64, out: *mut f64) -> OppnetStatus {
    guard(|| {
        let out = std::slice::from_raw_parts_mut(non_null_mut(out, "out")?, 3);
        out.copy_from_slice(&hue_jacobian(h, s, l)?);
        Ok(())
    })
}

/// Classify `n` responses against `baseline`.
///
/// # Safety
/// `responses` must hold `n` floats and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn oppnet_classify_responses(
    responses: *const f32,
    n: usize,
    baseline: f32,
    out: *mut OppnetClass,
) -> OppnetStatus {
    guard(|| {
        let values = std::slice::from_raw_parts(non_null(responses, "responses")?, n);
        *non_null_mut(out, "out")? = match classify_responses(values, baseline) {
            OpponencyClass::Opponent => OppnetClass::Opponent,
            OpponencyClass::NonOpponent => OppnetClass::NonOpponent,
            OpponencyClass::Unresponsive => OppnetClass::Unresponsive,
        };
        Ok(())
    })
}

/// Responses of one cell to the 360 integer hues. `pre` and `post` each
/// receive 360 floats; the baselines receive the black-input response.
///
/// # Safety
/// `net` must be a live handle; every output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn oppnet_probe_hue_curve(
    net: *const OppnetNetwork,
    layer: usize,
    channel: usize,
    row: usize,
    col: usize,
    pre: *mut f32,
    post: *mut f32,
    baseline_pre: *mut f32,
    baseline_post: *mut f32,
) -> OppnetStatus {
    guard(|| {
        let net = non_null(net, "net")?;
        let cfg = &net.params.config;
        let cell = CellId {
            layer: layer_arg(net, layer)?,
            channel,
            row,
            col,
        };
        let pre = std::slice::from_raw_parts_mut(non_null_mut(pre, "pre")?, 360);
        let post = std::slice::from_raw_parts_mut(non_null_mut(post, "post")?, 360);
        let bp = non_null_mut(baseline_pre, "baseline_pre")?;
        let bq = non_null_mut(baseline_post, "baseline_post")?;
        let bank = build_hue_bank(cfg.input_size, cfg.input_channels)?;
        let curve = probe_cell(&net.params, cell, &bank)?;
        pre.copy_from_slice(&curve.pre);
        post.copy_from_slice(&curve.post);
        *bp = curve.baseline_pre;
        *bq = curve.baseline_post;
        Ok(())
    })
}

/// d(summed post-activation of `layer`)/dh at each of `n` hues. Points
/// within 0.5° of a multiple of 60° get `NaN` and `undefined[i] = 1`.
///
/// # Safety
/// `net` must be a live handle; `hues`, `values` and `undefined` must each
/// hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn oppnet_hue_sensitivity(
    net: *const OppnetNetwork,
    layer: usize,
    hues: *const f64,
    n: usize,
    values: *mut f64,
    undefined: *mut u8,
) -> OppnetStatus {
    guard(|| {
        let net = non_null(net, "net")?;
        let layer = layer_arg(net, layer)?;
        let hues = std::slice::from_raw_parts(non_null(hues, "hues")?, n);
        let values = std::slice::from_raw_parts_mut(non_null_mut(values, "values")?, n);
        let undefined = std::slice::from_raw_parts_mut(non_null_mut(undefined, "undefined")?, n);
        let curve = hue_sensitivity(&net.params, layer, hues)?;
        for i in 0..n {
            values[i] = curve.mean[i].unwrap_or(f64::NAN);
            undefined[i] = u8::from(curve.undefined[i]);
        }
        Ok(())
    })
}
