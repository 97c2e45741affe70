//! Bit-exact MAC frame encoding and decoding.
//!
//! Covers the four 2003/2006 frame types (beacon, data, acknowledgment, MAC
//! command) with their composite fields:
//!
//! - frame control field (type, flags, addressing modes, version)
//! - short / EUI-64 addressing with PAN-ID compression
//! - superframe specification, GTS fields and pending-address fields in
//!   beacon payloads
//! - the command set: association request/response, disassociation
//!   notification, data request, beacon request, coordinator realignment,
//!   GTS request
//! - the 16-bit ITU-T FCS trailer
//!
//! Multi-byte fields are little-endian on the wire. `decode_frame` verifies
//! the FCS before anything else, so any bit error in a captured frame is
//! reported as [`CodecError::FcsMismatch`]. The security bit is rejected in
//! both directions; frames from later standard revisions (frame types 4-7,
//! version 2+) are rejected as unknown.

use std::fmt;

use crate::timing::MAX_PHY_PACKET_SIZE;

// ---------------------------------------------------------------------------
// Addresses
// ---------------------------------------------------------------------------

/// 16-bit short address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShortAddress(pub u16);

impl ShortAddress {
    /// Destination address matching every device on the PAN.
    pub const BROADCAST: ShortAddress = ShortAddress(0xFFFF);
    /// Placeholder for "associated, but no short address assigned".
    pub const UNASSIGNED: ShortAddress = ShortAddress(0xFFFE);

    pub fn is_broadcast(self) -> bool {
        self == Self::BROADCAST
    }
}

impl fmt::Display for ShortAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:04X}", self.0)
    }
}

/// 64-bit extended unique identifier (EUI-64). Eight bytes little-endian on
/// the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExtAddress(pub u64);

impl fmt::Display for ExtAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:016X}", self.0)
    }
}

/// Addressing half of a frame header: nothing, or a PAN id plus a short or
/// extended address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Addressing {
    Absent,
    Short { pan: u16, addr: ShortAddress },
    Extended { pan: u16, addr: ExtAddress },
}

impl Addressing {
    pub fn mode(&self) -> AddrMode {
        match self {
            Addressing::Absent => AddrMode::None,
            Addressing::Short { .. } => AddrMode::Short,
            Addressing::Extended { .. } => AddrMode::Extended,
        }
    }

    pub fn pan(&self) -> Option<u16> {
        match self {
            Addressing::Absent => None,
            Addressing::Short { pan, .. } | Addressing::Extended { pan, .. } => Some(*pan),
        }
    }

    pub fn is_broadcast(&self) -> bool {
        matches!(self, Addressing::Short { addr, .. } if addr.is_broadcast())
    }
}

impl fmt::Display for Addressing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Addressing::Absent => write!(f, "-"),
            Addressing::Short { pan, addr } => write!(f, "{:04X}:{}", pan, addr),
            Addressing::Extended { pan, addr } => write!(f, "{:04X}:{}", pan, addr),
        }
    }
}

// ---------------------------------------------------------------------------
// Frame control field
// ---------------------------------------------------------------------------

/// MAC frame type (bits 0-2 of the frame control field).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameType {
    Beacon = 0,
    Data = 1,
    Ack = 2,
    Command = 3,
}

impl FrameType {
    fn from_bits(v: u8) -> Result<FrameType, CodecError> {
        match v {
            0 => Ok(FrameType::Beacon),
            1 => Ok(FrameType::Data),
            2 => Ok(FrameType::Ack),
            3 => Ok(FrameType::Command),
            other => Err(CodecError::UnknownFrameType(other)),
        }
    }
}

impl fmt::Display for FrameType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameType::Beacon => write!(f, "Beacon"),
            FrameType::Data => write!(f, "Data"),
            FrameType::Ack => write!(f, "Ack"),
            FrameType::Command => write!(f, "Command"),
        }
    }
}

/// Addressing mode (2-bit field). Value 1 is reserved and rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AddrMode {
    None = 0,
    Short = 2,
    Extended = 3,
}

impl AddrMode {
    fn from_bits(v: u8) -> Result<AddrMode, CodecError> {
        match v {
            0 => Ok(AddrMode::None),
            2 => Ok(AddrMode::Short),
            3 => Ok(AddrMode::Extended),
            _ => Err(CodecError::ReservedAddrMode),
        }
    }
}

/// Frame version field. Versions 2 and 3 belong to later revisions and are
/// rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameVersion {
    V2003 = 0,
    V2006 = 1,
}

impl FrameVersion {
    fn from_bits(v: u8) -> Result<FrameVersion, CodecError> {
        match v {
            0 => Ok(FrameVersion::V2003),
            1 => Ok(FrameVersion::V2006),
            other => Err(CodecError::UnsupportedVersion(other)),
        }
    }
}

/// Decoded 16-bit frame control field.
///
/// Bit layout: 0-2 frame type, 3 security, 4 frame pending, 5 ack request,
/// 6 PAN-ID compression, 7-9 reserved (zero), 10-11 destination addressing
/// mode, 12-13 frame version, 14-15 source addressing mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameControl {
    pub frame_type: FrameType,
    pub security_enabled: bool,
    pub frame_pending: bool,
    pub ack_request: bool,
    pub pan_id_compression: bool,
    pub dst_addr_mode: AddrMode,
    pub frame_version: FrameVersion,
    pub src_addr_mode: AddrMode,
}

impl FrameControl {
    /// Pack into the 16-bit wire word. Reserved bits encode as zero.
    pub fn encode(&self) -> u16 {
        (self.frame_type as u16)
            | (self.security_enabled as u16) << 3
            | (self.frame_pending as u16) << 4
            | (self.ack_request as u16) << 5
            | (self.pan_id_compression as u16) << 6
            | (self.dst_addr_mode as u16) << 10
            | (self.frame_version as u16) << 12
            | (self.src_addr_mode as u16) << 14
    }

    /// Unpack from the 16-bit wire word, rejecting reserved addressing modes,
    /// unknown frame types, later-revision versions and nonzero reserved
    /// bits.
    pub fn decode(word: u16) -> Result<FrameControl, CodecError> {
        if word & 0b0000_0011_1000_0000 != 0 {
            return Err(CodecError::ReservedField("frame control bits 7-9"));
        }
        Ok(FrameControl {
            frame_type: FrameType::from_bits((word & 0b111) as u8)?,
            security_enabled: word & 1 << 3 != 0,
            frame_pending: word & 1 << 4 != 0,
            ack_request: word & 1 << 5 != 0,
            pan_id_compression: word & 1 << 6 != 0,
            dst_addr_mode: AddrMode::from_bits((word >> 10 & 0b11) as u8)?,
            frame_version: FrameVersion::from_bits((word >> 12 & 0b11) as u8)?,
            src_addr_mode: AddrMode::from_bits((word >> 14 & 0b11) as u8)?,
        })
    }
}

// ---------------------------------------------------------------------------
// Superframe specification
// ---------------------------------------------------------------------------

/// 16-bit superframe specification carried in beacon frames.
///
/// Bit layout: 0-3 beacon order, 4-7 superframe order, 8-11 final CAP slot,
/// 12 battery life extension, 13 reserved, 14 PAN coordinator,
/// 15 association permit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuperframeSpec {
    pub beacon_order: u8,
    pub superframe_order: u8,
    pub final_cap_slot: u8,
    pub battery_life_extension: bool,
    pub pan_coordinator: bool,
    pub association_permit: bool,
}

impl SuperframeSpec {
    /// Pack into the 16-bit wire word. Fields are masked to their 4-bit
    /// ranges; callers keep them in 0..=15.
    pub fn encode(&self) -> u16 {
        debug_assert!(self.beacon_order <= 15);
        debug_assert!(self.superframe_order <= 15);
        debug_assert!(self.final_cap_slot <= 15);
        (self.beacon_order as u16 & 0xF)
            | (self.superframe_order as u16 & 0xF) << 4
            | (self.final_cap_slot as u16 & 0xF) << 8
            | (self.battery_life_extension as u16) << 12
            | (self.pan_coordinator as u16) << 14
            | (self.association_permit as u16) << 15
    }

    /// Unpack from the 16-bit wire word. Every 4-bit value is in range by
    /// construction; the reserved bit is ignored here and checked by the
    /// frame decoder.
    pub fn decode(word: u16) -> SuperframeSpec {
        SuperframeSpec {
            beacon_order: (word & 0xF) as u8,
            superframe_order: (word >> 4 & 0xF) as u8,
            final_cap_slot: (word >> 8 & 0xF) as u8,
            battery_life_extension: word & 1 << 12 != 0,
            pan_coordinator: word & 1 << 14 != 0,
            association_permit: word & 1 << 15 != 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Beacon payload fields
// ---------------------------------------------------------------------------

/// Direction of a guaranteed time slot, from the device's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtsDirection {
    /// Device transmits to the coordinator in the slot.
    Transmit,
    /// Device receives from the coordinator in the slot.
    Receive,
}

/// One GTS descriptor advertised in a beacon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GtsBeaconDescriptor {
    pub short_addr: ShortAddress,
    /// First superframe slot of the GTS, 1..=15.
    pub starting_slot: u8,
    /// Length in slots.
    pub length: u8,
    pub direction: GtsDirection,
}

/// GTS fields of a beacon: permit flag plus up to seven descriptors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GtsFields {
    pub permit: bool,
    pub descriptors: Vec<GtsBeaconDescriptor>,
}

/// Pending-address fields of a beacon: devices with queued indirect frames.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PendingAddresses {
    pub short: Vec<ShortAddress>,
    pub extended: Vec<ExtAddress>,
}

impl PendingAddresses {
    pub fn is_empty(&self) -> bool {
        self.short.is_empty() && self.extended.is_empty()
    }
}

/// Structured beacon payload: superframe specification, GTS fields,
/// pending-address fields and the application beacon payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeaconPayload {
    pub superframe: SuperframeSpec,
    pub gts: GtsFields,
    pub pending: PendingAddresses,
    pub payload: Vec<u8>,
}

// ---------------------------------------------------------------------------
// MAC commands
// ---------------------------------------------------------------------------

/// Capability information carried in an association request.
///
/// Bit layout: 0 alternate PAN coordinator, 1 device type (1 = FFD),
/// 2 power source (1 = mains), 3 receiver on when idle, 4-6 reserved,
/// 7 allocate address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CapabilityInfo {
    pub alternate_pan_coordinator: bool,
    pub full_function_device: bool,
    pub mains_powered: bool,
    pub rx_on_when_idle: bool,
    pub allocate_address: bool,
}

impl CapabilityInfo {
    fn encode(&self) -> u8 {
        (self.alternate_pan_coordinator as u8)
            | (self.full_function_device as u8) << 1
            | (self.mains_powered as u8) << 2
            | (self.rx_on_when_idle as u8) << 3
            | (self.allocate_address as u8) << 7
    }

    fn decode(byte: u8) -> Result<CapabilityInfo, CodecError> {
        if byte & 0b0111_0000 != 0 {
            return Err(CodecError::ReservedField("capability bits 4-6"));
        }
        Ok(CapabilityInfo {
            alternate_pan_coordinator: byte & 1 != 0,
            full_function_device: byte & 1 << 1 != 0,
            mains_powered: byte & 1 << 2 != 0,
            rx_on_when_idle: byte & 1 << 3 != 0,
            allocate_address: byte & 1 << 7 != 0,
        })
    }
}

/// Association response status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssociationStatus {
    Success = 0,
    PanAtCapacity = 1,
    PanAccessDenied = 2,
}

impl AssociationStatus {
    fn decode(byte: u8) -> Result<AssociationStatus, CodecError> {
        match byte {
            0 => Ok(AssociationStatus::Success),
            1 => Ok(AssociationStatus::PanAtCapacity),
            2 => Ok(AssociationStatus::PanAccessDenied),
            _ => Err(CodecError::ReservedField("association status")),
        }
    }
}

/// GTS characteristics carried in a GTS request.
///
/// Bit layout: 0-3 length in slots, 4 direction (1 = receive), 5 type
/// (1 = allocate, 0 = deallocate), 6-7 reserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GtsCharacteristics {
    pub length: u8,
    pub direction: GtsDirection,
    pub allocate: bool,
}

impl GtsCharacteristics {
    fn encode(&self) -> u8 {
        debug_assert!(self.length <= 15);
        (self.length & 0xF)
            | (matches!(self.direction, GtsDirection::Receive) as u8) << 4
            | (self.allocate as u8) << 5
    }

    fn decode(byte: u8) -> Result<GtsCharacteristics, CodecError> {
        if byte & 0b1100_0000 != 0 {
            return Err(CodecError::ReservedField("GTS characteristics bits 6-7"));
        }
        Ok(GtsCharacteristics {
            length: byte & 0xF,
            direction: if byte & 1 << 4 != 0 {
                GtsDirection::Receive
            } else {
                GtsDirection::Transmit
            },
            allocate: byte & 1 << 5 != 0,
        })
    }
}

/// The MAC command set. Command identifiers follow the standard numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacCommand {
    AssociationRequest {
        capability: CapabilityInfo,
    },
    AssociationResponse {
        short_addr: ShortAddress,
        status: AssociationStatus,
    },
    DisassociationNotification {
        /// 1 = coordinator wishes the device to leave, 2 = device leaves.
        reason: u8,
    },
    DataRequest,
    BeaconRequest,
    CoordinatorRealignment {
        pan_id: u16,
        coord_short_addr: ShortAddress,
        channel: u8,
        short_addr: ShortAddress,
    },
    GtsRequest {
        characteristics: GtsCharacteristics,
    },
}

impl MacCommand {
    pub fn id(&self) -> u8 {
        match self {
            MacCommand::AssociationRequest { .. } => 0x01,
            MacCommand::AssociationResponse { .. } => 0x02,
            MacCommand::DisassociationNotification { .. } => 0x03,
            MacCommand::DataRequest => 0x04,
            MacCommand::BeaconRequest => 0x07,
            MacCommand::CoordinatorRealignment { .. } => 0x08,
            MacCommand::GtsRequest { .. } => 0x09,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MacCommand::AssociationRequest { .. } => "association-request",
            MacCommand::AssociationResponse { .. } => "association-response",
            MacCommand::DisassociationNotification { .. } => "disassociation",
            MacCommand::DataRequest => "data-request",
            MacCommand::BeaconRequest => "beacon-request",
            MacCommand::CoordinatorRealignment { .. } => "coordinator-realignment",
            MacCommand::GtsRequest { .. } => "gts-request",
        }
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.id());
        match self {
            MacCommand::AssociationRequest { capability } => out.push(capability.encode()),
            MacCommand::AssociationResponse { short_addr, status } => {
                out.extend_from_slice(&short_addr.0.to_le_bytes());
                out.push(*status as u8);
            }
            MacCommand::DisassociationNotification { reason } => out.push(*reason),
            MacCommand::DataRequest | MacCommand::BeaconRequest => {}
            MacCommand::CoordinatorRealignment {
                pan_id,
                coord_short_addr,
                channel,
                short_addr,
            } => {
                out.extend_from_slice(&pan_id.to_le_bytes());
                out.extend_from_slice(&coord_short_addr.0.to_le_bytes());
                out.push(*channel);
                out.extend_from_slice(&short_addr.0.to_le_bytes());
            }
            MacCommand::GtsRequest { characteristics } => out.push(characteristics.encode()),
        }
    }

    fn decode(bytes: &[u8]) -> Result<MacCommand, CodecError> {
        let (&id, params) = bytes.split_first().ok_or(CodecError::Truncated)?;
        let exact = |n: usize| -> Result<(), CodecError> {
            match params.len().cmp(&n) {
                std::cmp::Ordering::Less => Err(CodecError::Truncated),
                std::cmp::Ordering::Greater => Err(CodecError::TrailingBytes),
                std::cmp::Ordering::Equal => Ok(()),
            }
        };
        match id {
            0x01 => {
                exact(1)?;
                Ok(MacCommand::AssociationRequest {
                    capability: CapabilityInfo::decode(params[0])?,
                })
            }
            0x02 => {
                exact(3)?;
                Ok(MacCommand::AssociationResponse {
                    short_addr: ShortAddress(u16::from_le_bytes([params[0], params[1]])),
                    status: AssociationStatus::decode(params[2])?,
                })
            }
            0x03 => {
                exact(1)?;
                Ok(MacCommand::DisassociationNotification { reason: params[0] })
            }
            0x04 => {
                exact(0)?;
                Ok(MacCommand::DataRequest)
            }
            0x07 => {
                exact(0)?;
                Ok(MacCommand::BeaconRequest)
            }
            0x08 => {
                exact(7)?;
                Ok(MacCommand::CoordinatorRealignment {
                    pan_id: u16::from_le_bytes([params[0], params[1]]),
                    coord_short_addr: ShortAddress(u16::from_le_bytes([params[2], params[3]])),
                    channel: params[4],
                    short_addr: ShortAddress(u16::from_le_bytes([params[5], params[6]])),
                })
            }
            0x09 => {
                exact(1)?;
                Ok(MacCommand::GtsRequest {
                    characteristics: GtsCharacteristics::decode(params[0])?,
                })
            }
            other => Err(CodecError::UnknownCommand(other)),
        }
    }
}

// ---------------------------------------------------------------------------
// Frame
// ---------------------------------------------------------------------------

/// Frame payload, keyed by frame type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FramePayload {
    Beacon(BeaconPayload),
    Data(Vec<u8>),
    Ack,
    Command(MacCommand),
}

impl FramePayload {
    pub fn frame_type(&self) -> FrameType {
        match self {
            FramePayload::Beacon(_) => FrameType::Beacon,
            FramePayload::Data(_) => FrameType::Data,
            FramePayload::Ack => FrameType::Ack,
            FramePayload::Command(_) => FrameType::Command,
        }
    }
}

/// A fully-typed MAC frame. `encode_frame` / `decode_frame` map it to and
/// from the exact wire form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub frame_pending: bool,
    pub ack_request: bool,
    /// Elide the source PAN id on the wire (requires both addresses present
    /// and equal PAN ids).
    pub pan_id_compression: bool,
    pub version: FrameVersion,
    pub sequence: u8,
    pub dst: Addressing,
    pub src: Addressing,
    pub payload: FramePayload,
}

impl Frame {
    pub fn frame_type(&self) -> FrameType {
        self.payload.frame_type()
    }

    /// The frame control field this frame encodes to.
    pub fn control(&self) -> FrameControl {
        FrameControl {
            frame_type: self.frame_type(),
            security_enabled: false,
            frame_pending: self.frame_pending,
            ack_request: self.ack_request,
            pan_id_compression: self.pan_id_compression,
            dst_addr_mode: self.dst.mode(),
            frame_version: self.version,
            src_addr_mode: self.src.mode(),
        }
    }

    /// An immediate acknowledgment for `sequence`.
    pub fn ack(sequence: u8, frame_pending: bool) -> Frame {
        Frame {
            frame_pending,
            ack_request: false,
            pan_id_compression: false,
            version: FrameVersion::V2003,
            sequence,
            dst: Addressing::Absent,
            src: Addressing::Absent,
            payload: FramePayload::Ack,
        }
    }

    /// Analytic header length (frame control + sequence + addressing) for
    /// this frame's addressing configuration.
    pub fn header_len(&self) -> usize {
        wire_header_len(self.dst.mode(), self.src.mode(), self.pan_id_compression)
    }
}

/// Header length in bytes for the given addressing modes: 2 bytes frame
/// control, 1 byte sequence number, then PAN ids and addresses as present.
pub fn wire_header_len(dst: AddrMode, src: AddrMode, pan_id_compression: bool) -> usize {
    let addr_len = |m: AddrMode| match m {
        AddrMode::None => 0,
        AddrMode::Short => 2,
        AddrMode::Extended => 8,
    };
    let dst_pan = if dst == AddrMode::None { 0 } else { 2 };
    let src_pan = if src == AddrMode::None || pan_id_compression {
        0
    } else {
        2
    };
    2 + 1 + dst_pan + addr_len(dst) + src_pan + addr_len(src)
}

/// Largest MSDU payload that fits a data frame with the given addressing.
pub fn max_data_payload(dst: AddrMode, src: AddrMode, pan_id_compression: bool) -> usize {
    MAX_PHY_PACKET_SIZE - wire_header_len(dst, src, pan_id_compression) - FCS_LEN
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Frame codec failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecError {
    /// Input shorter than the structure it must contain.
    Truncated,
    /// FCS trailer does not match the frame contents.
    FcsMismatch { expected: u16, found: u16 },
    /// Encoded frame would exceed 127 bytes.
    FrameTooLong { len: usize },
    /// Addressing mode value 1 is reserved.
    ReservedAddrMode,
    /// Frame type values 4-7 belong to later revisions.
    UnknownFrameType(u8),
    /// Frame versions 2+ belong to later revisions.
    UnsupportedVersion(u8),
    /// Unknown MAC command identifier.
    UnknownCommand(u8),
    /// Security processing is not supported; the security bit is rejected.
    SecurityUnsupported,
    /// PAN-ID compression set without both addresses present, or with
    /// differing PAN ids on encode.
    InvalidPanCompression,
    /// A reserved bit or value is nonzero.
    ReservedField(&'static str),
    /// Bytes remain after a fixed-size structure.
    TrailingBytes,
    /// Frame structure violates a type rule (e.g. beacon without source).
    Malformed(&'static str),
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::Truncated => write!(f, "truncated frame"),
            CodecError::FcsMismatch { expected, found } => {
                write!(f, "FCS mismatch: computed 0x{expected:04X}, frame carries 0x{found:04X}")
            }
            CodecError::FrameTooLong { len } => {
                write!(f, "frame too long: {len} bytes exceeds {MAX_PHY_PACKET_SIZE}")
            }
            CodecError::ReservedAddrMode => write!(f, "reserved addressing mode"),
            CodecError::UnknownFrameType(v) => write!(f, "unknown frame type {v}"),
            CodecError::UnsupportedVersion(v) => write!(f, "unsupported frame version {v}"),
            CodecError::UnknownCommand(v) => write!(f, "unknown command 0x{v:02X}"),
            CodecError::SecurityUnsupported => write!(f, "security-enabled frames unsupported"),
            CodecError::InvalidPanCompression => write!(f, "invalid PAN-ID compression"),
            CodecError::ReservedField(what) => write!(f, "reserved field nonzero: {what}"),
            CodecError::TrailingBytes => write!(f, "unexpected trailing bytes"),
            CodecError::Malformed(what) => write!(f, "malformed frame: {what}"),
        }
    }
}

impl std::error::Error for CodecError {}

// ---------------------------------------------------------------------------
// FCS (16-bit ITU-T CRC, x^16 + x^12 + x^5 + 1, init 0, bit-reflected)
// ---------------------------------------------------------------------------

pub const FCS_LEN: usize = 2;

const fn build_fcs_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u16;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ 0x8408 } else { crc >> 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static FCS_TABLE: [u16; 256] = build_fcs_table();

/// Frame check sequence over `data`: CRC-16 ITU-T, polynomial
/// x^16 + x^12 + x^5 + 1, initial value 0x0000, LSB-first processing.
/// Transmitted little-endian after the MAC payload.
pub fn fcs(data: &[u8]) -> u16 {
    let mut crc = 0u16;
    for &byte in data {
        crc = (crc >> 8) ^ FCS_TABLE[((crc ^ byte as u16) & 0xFF) as usize];
    }
    crc
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

fn encode_addressing(
    dst: &Addressing,
    src: &Addressing,
    pan_id_compression: bool,
    out: &mut Vec<u8>,
) -> Result<(), CodecError> {
    if pan_id_compression {
        match (dst.pan(), src.pan()) {
            (Some(d), Some(s)) if d == s => {}
            _ => return Err(CodecError::InvalidPanCompression),
        }
    }
    match dst {
        Addressing::Absent => {}
        Addressing::Short { pan, addr } => {
            out.extend_from_slice(&pan.to_le_bytes());
            out.extend_from_slice(&addr.0.to_le_bytes());
        }
        Addressing::Extended { pan, addr } => {
            out.extend_from_slice(&pan.to_le_bytes());
            out.extend_from_slice(&addr.0.to_le_bytes());
        }
    }
    match src {
        Addressing::Absent => {}
        Addressing::Short { pan, addr } => {
            if !pan_id_compression {
                out.extend_from_slice(&pan.to_le_bytes());
            }
            out.extend_from_slice(&addr.0.to_le_bytes());
        }
        Addressing::Extended { pan, addr } => {
            if !pan_id_compression {
                out.extend_from_slice(&pan.to_le_bytes());
            }
            out.extend_from_slice(&addr.0.to_le_bytes());
        }
    }
    Ok(())
}

fn encode_beacon_payload(b: &BeaconPayload, out: &mut Vec<u8>) -> Result<(), CodecError> {
    out.extend_from_slice(&b.superframe.encode().to_le_bytes());

    let count = b.gts.descriptors.len();
    if count > 7 {
        return Err(CodecError::Malformed("more than 7 GTS descriptors"));
    }
    out.push(count as u8 | (b.gts.permit as u8) << 7);
    if count > 0 {
        let mut mask = 0u8;
        for (i, d) in b.gts.descriptors.iter().enumerate() {
            if matches!(d.direction, GtsDirection::Receive) {
                mask |= 1 << i;
            }
        }
        out.push(mask);
        for d in &b.gts.descriptors {
            if d.starting_slot > 15 || d.length > 15 {
                return Err(CodecError::Malformed("GTS descriptor slot out of range"));
            }
            out.extend_from_slice(&d.short_addr.0.to_le_bytes());
            out.push((d.starting_slot & 0xF) | (d.length & 0xF) << 4);
        }
    }

    if b.pending.short.len() > 7 || b.pending.extended.len() > 7 {
        return Err(CodecError::Malformed("more than 7 pending addresses"));
    }
    out.push(b.pending.short.len() as u8 | (b.pending.extended.len() as u8) << 4);
    for a in &b.pending.short {
        out.extend_from_slice(&a.0.to_le_bytes());
    }
    for a in &b.pending.extended {
        out.extend_from_slice(&a.0.to_le_bytes());
    }

    out.extend_from_slice(&b.payload);
    Ok(())
}

/// Encode `frame` to its wire form, FCS appended. Little-endian multi-byte
/// fields throughout; total length is checked against the 127-byte PHY
/// limit.
pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, CodecError> {
    match frame.frame_type() {
        FrameType::Ack => {
            if frame.dst.mode() != AddrMode::None || frame.src.mode() != AddrMode::None {
                return Err(CodecError::Malformed("ack frames carry no addressing"));
            }
            if frame.ack_request {
                return Err(CodecError::Malformed("ack frames cannot request acks"));
            }
        }
        FrameType::Beacon => {
            if frame.src.mode() == AddrMode::None || frame.dst.mode() != AddrMode::None {
                return Err(CodecError::Malformed(
                    "beacons carry a source address and no destination",
                ));
            }
        }
        _ => {}
    }

    let mut out = Vec::with_capacity(MAX_PHY_PACKET_SIZE);
    out.extend_from_slice(&frame.control().encode().to_le_bytes());
    out.push(frame.sequence);
    encode_addressing(&frame.dst, &frame.src, frame.pan_id_compression, &mut out)?;

    match &frame.payload {
        FramePayload::Beacon(b) => encode_beacon_payload(b, &mut out)?,
        FramePayload::Data(msdu) => out.extend_from_slice(msdu),
        FramePayload::Ack => {}
        FramePayload::Command(cmd) => cmd.encode_into(&mut out),
    }

    let total = out.len() + FCS_LEN;
    if total > MAX_PHY_PACKET_SIZE {
        return Err(CodecError::FrameTooLong { len: total });
    }
    let crc = fcs(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        let b = *self.bytes.get(self.pos).ok_or(CodecError::Truncated)?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes([self.u8()?, self.u8()?]))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        let mut buf = [0u8; 8];
        for b in &mut buf {
            *b = self.u8()?;
        }
        Ok(u64::from_le_bytes(buf))
    }

    fn rest(&mut self) -> &'a [u8] {
        let r = &self.bytes[self.pos..];
        self.pos = self.bytes.len();
        r
    }
}

fn decode_beacon_payload(r: &mut Reader) -> Result<BeaconPayload, CodecError> {
    let sf_word = r.u16()?;
    if sf_word & 1 << 13 != 0 {
        return Err(CodecError::ReservedField("superframe spec bit 13"));
    }
    let superframe = SuperframeSpec::decode(sf_word);

    let gts_spec = r.u8()?;
    if gts_spec & 0b0111_1000 != 0 {
        return Err(CodecError::ReservedField("GTS specification bits 3-6"));
    }
    let count = (gts_spec & 0b111) as usize;
    let permit = gts_spec & 1 << 7 != 0;
    let mut descriptors = Vec::with_capacity(count);
    if count > 0 {
        let mask = r.u8()?;
        if mask & 0x80 != 0 {
            return Err(CodecError::ReservedField("GTS directions bit 7"));
        }
        if mask >> count != 0 {
            return Err(CodecError::ReservedField("GTS directions beyond count"));
        }
        for i in 0..count {
            let short_addr = ShortAddress(r.u16()?);
            let slot_len = r.u8()?;
            descriptors.push(GtsBeaconDescriptor {
                short_addr,
                starting_slot: slot_len & 0xF,
                length: slot_len >> 4,
                direction: if mask & 1 << i != 0 {
                    GtsDirection::Receive
                } else {
                    GtsDirection::Transmit
                },
            });
        }
    }

    let pending_spec = r.u8()?;
    if pending_spec & 0b1000_1000 != 0 {
        return Err(CodecError::ReservedField("pending address spec bits 3/7"));
    }
    let n_short = (pending_spec & 0b111) as usize;
    let n_ext = (pending_spec >> 4 & 0b111) as usize;
    let mut pending = PendingAddresses::default();
    for _ in 0..n_short {
        pending.short.push(ShortAddress(r.u16()?));
    }
    for _ in 0..n_ext {
        pending.extended.push(ExtAddress(r.u64()?));
    }

    Ok(BeaconPayload {
        superframe,
        gts: GtsFields {
            permit,
            descriptors,
        },
        pending,
        payload: r.rest().to_vec(),
    })
}

/// Decode a wire frame. The FCS is verified over the whole frame before any
/// structural parsing, so corrupted input fails with `FcsMismatch`.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, CodecError> {
    // Minimum frame: frame control + sequence + FCS.
    if bytes.len() < 3 + FCS_LEN {
        return Err(CodecError::Truncated);
    }
    if bytes.len() > MAX_PHY_PACKET_SIZE {
        return Err(CodecError::FrameTooLong { len: bytes.len() });
    }
    let (body, fcs_bytes) = bytes.split_at(bytes.len() - FCS_LEN);
    let found = u16::from_le_bytes([fcs_bytes[0], fcs_bytes[1]]);
    let expected = fcs(body);
    if expected != found {
        return Err(CodecError::FcsMismatch { expected, found });
    }

    let mut r = Reader::new(body);
    let control = FrameControl::decode(r.u16()?)?;
    if control.security_enabled {
        return Err(CodecError::SecurityUnsupported);
    }
    let sequence = r.u8()?;

    if control.pan_id_compression
        && (control.dst_addr_mode == AddrMode::None || control.src_addr_mode == AddrMode::None)
    {
        return Err(CodecError::InvalidPanCompression);
    }

    let dst = match control.dst_addr_mode {
        AddrMode::None => Addressing::Absent,
        AddrMode::Short => Addressing::Short {
            pan: r.u16()?,
            addr: ShortAddress(r.u16()?),
        },
        AddrMode::Extended => Addressing::Extended {
            pan: r.u16()?,
            addr: ExtAddress(r.u64()?),
        },
    };
    let src_pan = if control.src_addr_mode != AddrMode::None {
        if control.pan_id_compression {
            dst.pan().ok_or(CodecError::InvalidPanCompression)?
        } else {
            r.u16()?
        }
    } else {
        0
    };
    let src = match control.src_addr_mode {
        AddrMode::None => Addressing::Absent,
        AddrMode::Short => Addressing::Short {
            pan: src_pan,
            addr: ShortAddress(r.u16()?),
        },
        AddrMode::Extended => Addressing::Extended {
            pan: src_pan,
            addr: ExtAddress(r.u64()?),
        },
    };

    let payload = match control.frame_type {
        FrameType::Beacon => {
            if src.mode() == AddrMode::None || dst.mode() != AddrMode::None {
                return Err(CodecError::Malformed(
                    "beacons carry a source address and no destination",
                ));
            }
            FramePayload::Beacon(decode_beacon_payload(&mut r)?)
        }
        FrameType::Data => FramePayload::Data(r.rest().to_vec()),
        FrameType::Ack => {
            if dst.mode() != AddrMode::None || src.mode() != AddrMode::None {
                return Err(CodecError::Malformed("ack frames carry no addressing"));
            }
            if control.ack_request {
                return Err(CodecError::Malformed("ack frames cannot request acks"));
            }
            if r.remaining() != 0 {
                return Err(CodecError::TrailingBytes);
            }
            FramePayload::Ack
        }
        FrameType::Command => FramePayload::Command(MacCommand::decode(r.rest())?),
    };

    Ok(Frame {
        frame_pending: control.frame_pending,
        ack_request: control.ack_request,
        pan_id_compression: control.pan_id_compression,
        version: control.frame_version,
        sequence,
        dst,
        src,
        payload,
    })
}

// ---------------------------------------------------------------------------
