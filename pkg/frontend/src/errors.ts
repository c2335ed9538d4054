/** Error taxonomy mapped onto process exit codes. */

export const EXIT_OK = 0;
export const EXIT_USAGE = 2;
export const EXIT_MISSING_FILE = 3;
export const EXIT_INCOMPLETE_MANIFEST = 4;

export class UsageError extends Error {
  readonly exitCode = EXIT_USAGE;
}

export class MissingFileError extends Error {
  readonly exitCode = EXIT_MISSING_FILE;
}

export class IncompleteManifestError extends Error {
  readonly exitCode = EXIT_INCOMPLETE_MANIFEST;
}
