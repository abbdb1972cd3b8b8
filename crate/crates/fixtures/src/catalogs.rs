//! Template catalogs modelled on the sixteen LogHub systems. A slot is
//! `{generator}` or `{generator:CAT}`; everything else is static text.
//! Catalogs are listed in decreasing frequency.

pub const SYSTEMS: [&str; 16] = [
    "HDFS",
    "Hadoop",
    "Spark",
    "Zookeeper",
    "BGL",
    "HPC",
    "Thunderbird",
    "Windows",
    "Linux",
    "Android",
    "HealthApp",
    "Apache",
    "OpenSSH",
    "OpenStack",
    "Mac",
    "Proxifier",
];

pub fn catalog(system: &str) -> Option<&'static [&'static str]> {
    Some(match system {
        "HDFS" => HDFS,
        "Hadoop" => HADOOP,
        "Spark" => SPARK,
        "Zookeeper" => ZOOKEEPER,
        "BGL" => BGL,
        "HPC" => HPC,
        "Thunderbird" => THUNDERBIRD,
        "Windows" => WINDOWS,
        "Linux" => LINUX,
        "Android" => ANDROID,
        "HealthApp" => HEALTHAPP,
        "Apache" => APACHE,
        "OpenSSH" => OPENSSH,
        "OpenStack" => OPENSTACK,
        "Mac" => MAC,
        "Proxifier" => PROXIFIER,
        _ => return None,
    })
}

const HDFS: &[&str] = &[
    "Receiving block {blk} src: /{ipport} dest: /{ipport}",
    "BLOCK* NameSystem.addStoredBlock: blockMap updated: {ipport} is added to {blk} size {size:CRS}",
    "PacketResponder {small:OID} for block {blk} terminating",
    "Received block {blk} of size {size:CRS} from /{ip}",
    "Verification succeeded for {blk}",
    "Deleting block {blk} file {path}",
    "BLOCK* NameSystem.allocateBlock: {path} {blk}",
    "BLOCK* NameSystem.delete: {blk} is added to invalidSet of {ipport}",
    "{ipport} Served block {blk} to /{ip}",
    "{ipport}:Got exception while serving {blk} to /{ip}:",
    "Received block {blk} src: /{ipport} dest: /{ipport} of size {size:CRS}",
    "BLOCK* ask {ipport} to replicate {blk} to datanode(s) {ipport}",
    "PendingReplicationMonitor timed out block {blk}",
    "writeBlock {blk} received exception java.io.IOException: Could not read from stream",
];

const HADOOP: &[&str] = &[
    "Progress of TaskAttempt {attempt} is : {float}",
    "{attempt} TaskAttempt Transitioned from NEW to UNASSIGNED",
    "{task} Task Transitioned from NEW to SCHEDULED",
    "Retrying connect to server: {host}:{port}. Already tried {small} time(s); maxRetries={num}",
    "Before Scheduling: PendingReds:{num} ScheduledMaps:{num} ScheduledReds:{num} AssignedMaps:{num} AssignedReds:{num} CompletedMaps:{num} CompletedReds:{num}",
    "Num completed Tasks: {num}",
    "JVM with ID : {jvm} asked for a task",
    "Address change detected. Old: {host}/{ip}:{port} New: {host}:{port}",
    "Created MRAppMaster for application {appattempt}",
    "Reduce slow start threshold not met. completedMapsForReduceSlowstart {num}",
    "Using mapred newApiCommitter.",
    "OutputCommitter set in config null",
    "Executing with tokens:",
];

const SPARK: &[&str] = &[
    "Found block {rdd} locally",
    "Running task {float} in stage {float} (TID {num:OID})",
    "Finished task {float} in stage {float} (TID {num:OID}). {size:CRS} bytes result sent to driver",
    "Reading broadcast variable {small:OID} took {num:TDA} ms",
    "Started reading broadcast variable {small:OID}",
    "Block {rdd} stored as bytes in memory (estimated size {kb} KB, free {kb} KB)",
    "Partition {rdd} not found, computing it",
    "Got assigned task {num:OID}",
    "Changing view acls to: {user}",
    "Successfully registered with driver",
    "Removed TaskSet {float}, whose tasks have all completed, from pool",
    "Starting executor ID {small:OID} on host {host}",
    "MemoryStore started with capacity {kb} MB",
    "Registered signal handlers for TERM, HUP, INT",
];

const ZOOKEEPER: &[&str] = &[
    "Received connection request /{ipport}",
    "Accepted socket connection from /{ipport}",
    "Closed socket connection for client /{ipport} which had sessionid {hexid}",
    "Client attempting to establish new session at /{ipport}",
    "Established session {hexid} with negotiated timeout {num:TDA} for client /{ipport}",
    "Expiring session {hexid}, timeout of {ms} exceeded",
    "Processed session termination for sessionid: {hexid}",
    "Closed socket connection for client /{ipport} (no session established for client)",
    "caught end of stream exception",
    "Connection broken for id {small:OID}, my id = {small:OID}, error =",
    "Interrupting SendWorker",
    "Send worker leaving thread",
    "Notification time out: {num:TDA}",
    "Have smaller server identifier, so dropping the connection: ({small:OID}, {small:OID})",
    "Cannot open channel to {small:OID} at election address /{ipport}",
    "Exception causing close of session {hexid} due to java.io.IOException: ZooKeeperServer not running",
    "Snapshotting: {hexid} to {path}",
    "Getting a snapshot from leader",
    "FOLLOWING - LEADER ELECTION TOOK - {num:TDA}",
];

const BGL: &[&str] = &[
    "instruction cache parity error corrected",
    "generating core.{num:OID}",
    "{num} double-hummer alignment exceptions",
    "CE sym {small:OID}, at {hex:LOI}, mask {hex:OTP}",
    "data TLB error interrupt",
    "total of {num} ddr error(s) detected and corrected",
    "ciod: failed to read message prefix on control stream (CioStream socket to {ipport}",
    "ciod: Error loading {path}: invalid or missing program image, No such file or directory",
    "machine check interrupt",
    "rts: kernel terminated for reason {num:STC}",
    "Lustre mount FAILED : {node} : block_id : location",
    "{num} ddr errors(s) detected and corrected on rank {small:OID}, symbol {num:OTP}, bit {small:OTP}",
];

const HPC: &[&str] = &[
    "Component State Change: Component {node} is in the unavailable state (HWID={num:OID})",
    "PSU status ( {state:SID} {state:SID} )",
    "ServerFileSystem domain {path} is full",
    "node-{num:OID} has detected an available network connection on network {ip} via interface alt0",
    "Fan speeds ( {num:OTP} {num:OTP} {num:OTP} {num:OTP} {num:OTP} {num:OTP} )",
    "Temperature ({num:OTP}C) exceeds warning threshold",
    "risBoot command Error: command not found",
    "ambient={num:OTP}",
    "Link error on broadcast tree Interconnect-{hex:OID}",
    "boot (command {num:OID}) Error: Can not reach node",
    "configured out",
];

const THUNDERBIRD: &[&str] = &[
    "ib_sm_sweep.c:{num:LOI}: No topology change",
    "session opened for user {user} by (uid={small:OID})",
    "session closed for user {user}",
    "(root) CMD (run-parts {path})",
    "synchronized to {ip}, stratum {small:OTP}",
    "check pass; user unknown",
    "authentication failure; logname= uid={small:OID} euid={small:OID} tty=NODEVssh ruser= rhost={host}",
    "Accepted publickey for {user} from {ip} port {port} ssh2",
    "Received disconnect from {ip}: 11: Bye Bye",
    "PCI Interrupt {hex:LOI} -> GSI {num:OID} (level, low) -> IRQ {num:OID}",
];

const WINDOWS: &[&str] = &[
    "Read out cached package applicability for package: {pkg}, ApplicableState: {num:STC}, CurrentState:{num:STC}",
    "Warning: Unrecognized packageExtended attribute.",
    "Session: {sessid} initialized by client WindowsUpdateAgent.",
    "Loaded Servicing Stack {ver} with Core: {path}",
    "SQM: Initializing online with Windows opt-in: {bool}",
    "SQM: Cleaning up report files older than {small:TDA} days.",
    "SQM: Requesting upload of all unsent reports.",
    "SQM: Failed to start upload with file pattern: {path}, flags: {hex:OTP} HRESULT = {hex:STC} - E_FAIL",
    "Ending TrustedInstaller initialization.",
    "Starting the TrustedInstaller main loop.",
    "TrustedInstaller service starts successfully.",
    "Expecting attribute name HRESULT = {hex:STC} - CBS_E_MANIFEST_INVALID_ITEM",
];

const LINUX: &[&str] = &[
    "authentication failure; logname= uid={small:OID} euid={small:OID} tty=NODEVssh ruser= rhost={host}",
    "check pass; user unknown",
    "session opened for user {user} by (uid={small:OID})",
    "session closed for user {user}",
    "connection from {ip} ({host}) at {date}",
    "ALERT exited abnormally with {small:STC}",
    "{svc} startup succeeded",
    "{svc} shutdown succeeded",
    "Kerberos authentication failed",
    "warning: can't get client address: Connection reset by peer",
    "FAILED LOGIN {small:OBA} FROM ({host}) FOR {user}, Authentication failure",
];

const ANDROID: &[&str] = &[
    "acquire lock={lockid}, flags={hex:OTP}, tag=\"{word}\", name={pkg}, ws=null, uid={num:OID}, pid={pid}",
    "release:lock={lockid}, flg={hex:OTP}, routeAppId={num:OID}",
    "getTasks: max={small:OBA}, flags={small:OTP}",
    "interceptKeyBeforeQueueing: key {num:OID} , result:{small:STC}",
    "handleMessage what={small:OTP}",
    "cleanUpApplicationRecord -- {pid}",
    "setSystemUiVisibility vis={hex:OTP} mask={hex:OTP} oldVal={hex:OTP} newVal={hex:OTP} diff={hex:OTP}",
    "Skipping AppWindowToken because it has no windows",
    "onReceive action={action}",
    "Screen off by power key",
];

const HEALTHAPP: &[&str] = &[
    "onStandStepChanged {num}",
    "onExtend:{ts} {small:OTP} {small:OTP} {small:OTP}",
    "processHandleBroadcastAction action:{action}",
    "flush sensor data",
    "REPORT : {num} {num} {num} {num}",
    "getTodayTotalDetailSteps = {ts}##{num}##{num}##{num}##{num}##{ts}",
    "setTodayTotalDetailSteps={ts}##{num}##{num}##{num}##{num}##{ts}",
    "calculateCaloriesWithCache totalCalories={num}",
    "calculateAltitudeWithCache totalAltitude={num}",
    "screen status unknown,think screen on",
    "upLoadOneMinuteDataToEngine time = {ts}",
];

const APACHE: &[&str] = &[
    "jk2_init() Found child {pid} in scoreboard slot {small:LOI}",
    "workerEnv.init() ok {path}",
    "mod_jk child workerEnv in error state {small:STC}",
    "[client {ip}] Directory index forbidden by rule: {path}",
    "jk2_init() Can't find child {pid} in scoreboard",
    "mod_jk child init {small:OTP} -{small:OTP}",
];

const OPENSSH: &[&str] = &[
    "Failed password for {user} from {ip} port {port} ssh2",
    "pam_unix(sshd:auth): authentication failure; logname= uid={small:OID} euid={small:OID} tty=ssh ruser= rhost={ip} user={user}",
    "Invalid user {user} from {ip}",
    "input_userauth_request: invalid user {user} [preauth]",
    "Received disconnect from {ip}: 11: Bye Bye [preauth]",
    "pam_unix(sshd:auth): check pass; user unknown",
    "Failed password for invalid user {user} from {ip} port {port} ssh2",
    "reverse mapping checking getaddrinfo for {host} {ip} failed - POSSIBLE BREAK-IN ATTEMPT!",
    "Connection closed by {ip} [preauth]",
    "PAM {small:OBA} more authentication failures; logname= uid={small:OID} euid={small:OID} tty=ssh ruser= rhost={ip}",
    "Accepted password for {user} from {ip} port {port} ssh2",
    "Did not receive identification string from {ip}",
    "pam_unix(sshd:session): session opened for user {user} by (uid={small:OID})",
];

const OPENSTACK: &[&str] = &[
    "{ip} \"GET /v2/{uuid}/servers/detail HTTP/1.1\" status: {code} len: {num:CRS} time: {float:TDA}",
    "{ip} \"POST /v2/{uuid}/os-server-external-events HTTP/1.1\" status: {code} len: {num:CRS} time: {float:TDA}",
    "[instance: {uuid}] VM Started (Lifecycle Event)",
    "[instance: {uuid}] VM Paused (Lifecycle Event)",
    "[instance: {uuid}] Terminating instance",
    "[instance: {uuid}] Took {float:TDA} seconds to spawn the instance on the hypervisor.",
    "[instance: {uuid}] Claim successful",
    "Auditing locally available compute resources for node {node}",
    "Final resource view: name={node} phys_ram={mb} used_ram={mb} phys_disk={core}GB used_disk={core}GB total_vcpus={core} used_vcpus={core}",
    "[instance: {uuid}] Deleting instance files {path}",
    "Running instance usage audit for host {node} from {clock} to {clock}. {small:OBA} instances.",
];

const MAC: &[&str] = &[
    "ARPT: {float:TDA}: wl0: wl_update_tcpkeep_seq: Original Seq: {num:OID}, Ack: {num:OID}, Win size: {num:CRS}",
    "ARPT: {float:TDA}: AirPort_Brcm43xx::powerChange: System {state}",
    "en0: BSSID changed to {mac}",
    "CCFile::captureLog Received Capture notice id: {num:OID}, reason = {word:OTP}",
    "Sandbox: com.apple.Addres({pid}) deny(1) network-outbound {path}",
    "tcp_connection_destination_perform_socket_connect {num:OID} connectx to {ipport}@{small:OTP} failed: {small:STC} - Network is unreachable",
    "objc{pid}: Class {cls} is implemented in both {path} and {path}. One of the two will be used. Which one is undefined.",
    "hibernate_page_list_setall time: {num:TDA} ms",
    "Thunderbolt {small:OID} PCI - LS={small:OTP} PS={small:OTP}",
];

const PROXIFIER: &[&str] = &[
    "{host}:{port} open through proxy {host}:{port} HTTPS",
    "{host}:{port} close, {num:CRS} bytes sent, {num:CRS} bytes received, lifetime {dur}",
    "{host}:{port} close, {num:CRS} bytes ({kb} KB) sent, {num:CRS} bytes ({kb} KB) received, lifetime {dur}",
    "{host}:{port} error : Could not connect through proxy {host}:{port} - Proxy server cannot establish a connection with the target, status code {code}",
    "{host}:{port} open through proxy {host}:{port} SOCKS5",
    "{host}:{port} error : A connection request was canceled before the completion.",
    "open through proxy {host}:{port} HTTPS",
    "Error : Could not connect to proxy {host}:{port} - connection timeout ({num:TDA} ms)",
];
