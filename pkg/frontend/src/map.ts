// Small slippy-map view: raster tiles in web-mercator, one pin, drag to
// pan, wheel or pinch to zoom. When tiles fail to load the map degrades to
// a textual coordinate display instead of an empty gray box.

export const TILE_SIZE = 256;
export const MIN_ZOOM = 2;
export const MAX_ZOOM = 19;

export function lonToWorldX(lon: number, zoom: number): number {
  return ((lon + 180) / 360) * TILE_SIZE * 2 ** zoom;
}

export function latToWorldY(lat: number, zoom: number): number {
  const rad = (lat * Math.PI) / 180;
  return (
    ((1 - Math.asinh(Math.tan(rad)) / Math.PI) / 2) * TILE_SIZE * 2 ** zoom
  );
}

export function worldXToLon(x: number, zoom: number): number {
  return (x / (TILE_SIZE * 2 ** zoom)) * 360 - 180;
}

export function worldYToLat(y: number, zoom: number): number {
  const n = Math.PI * (1 - (2 * y) / (TILE_SIZE * 2 ** zoom));
  return (Math.atan(Math.sinh(n)) * 180) / Math.PI;
}

export function tileUrl(
  template: string,
  zoom: number,
  x: number,
  y: number,
): string {
  const subdomains = "abc";
  return template
    .replace("{s}", subdomains[(x + y) % subdomains.length])
    .replace("{z}", String(zoom))
    .replace("{x}", String(x))
    .replace("{y}", String(y));
}

interface PointerState {
  x: number;
  y: number;
}

export interface TileMapOptions {
  tileUrlTemplate: string;
  attribution: string;
  fallbackText: string;
  // jsdom reports zero client sizes; tests pass an explicit size instead
  fallbackSize?: { width: number; height: number };
}

export class TileMap {
  private lat = 0;
  private lon = 0;
  private zoom: number = MIN_ZOOM;
  private pinLat: number | null = null;
  private pinLon: number | null = null;
  private degraded = false;

  private readonly tiles: HTMLElement;
  private readonly pin: HTMLElement;
  private readonly fallback: HTMLElement;
  private readonly pointers = new Map<number, PointerState>();
  private pinchStart: { distance: number; zoom: number } | null = null;

  constructor(
    readonly root: HTMLElement,
    private readonly options: TileMapOptions,
  ) {
    root.classList.add("map");
    this.tiles = document.createElement("div");
    this.tiles.className = "tiles";
    this.pin = document.createElement("div");
    this.pin.className = "pin";
    this.pin.hidden = true;
    this.fallback = document.createElement("div");
    this.fallback.className = "fallback";
    this.fallback.hidden = true;
    const attribution = document.createElement("div");
    attribution.className = "attribution";
    attribution.textContent = options.attribution;
    root.append(this.tiles, this.pin, this.fallback, attribution);
    this.bindGestures();
  }

  get center(): { lat: number; lon: number } {
    return { lat: this.lat, lon: this.lon };
  }

  get zoomLevel(): number {
    return this.zoom;
  }

  get isDegraded(): boolean {
    return this.degraded;
  }

  setView(lat: number, lon: number, zoom?: number): void {
    this.lat = lat;
    this.lon = lon;
    if (zoom !== undefined) this.zoom = clampZoom(zoom);
    this.degraded = false;
    this.render();
  }

  setPin(lat: number, lon: number): void {
    this.pinLat = lat;
    this.pinLon = lon;
    this.render();
  }

  clearPin(): void {
    this.pinLat = null;
    this.pinLon = null;
    this.render();
  }

  setZoom(zoom: number): void {
    const next = clampZoom(zoom);
    if (next === this.zoom) return;
    this.zoom = next;
    this.render();
  }

  zoomIn(): void {
    this.setZoom(this.zoom + 1);
  }

  zoomOut(): void {
    this.setZoom(this.zoom - 1);
  }

  panBy(dx: number, dy: number): void {
    const x = lonToWorldX(this.lon, this.zoom) - dx;
    const y = latToWorldY(this.lat, this.zoom) - dy;
    this.lon = worldXToLon(x, this.zoom);
    this.lat = worldYToLat(y, this.zoom);
    this.render();
  }

  pinPosition(): { left: number; top: number } | null {
    if (this.pinLat === null || this.pinLon === null) return null;
    const { width, height } = this.size();
    const left =
      lonToWorldX(this.pinLon, this.zoom) -
      lonToWorldX(this.lon, this.zoom) +
      width / 2;
    const top =
      latToWorldY(this.pinLat, this.zoom) -
      latToWorldY(this.lat, this.zoom) +
      height / 2;
    return { left, top };
  }

  render(): void {
    if (this.degraded) {
      this.renderFallback();
      return;
    }
    this.fallback.hidden = true;
    this.tiles.hidden = false;
    this.tiles.replaceChildren();

    const { width, height } = this.size();
    const originX = lonToWorldX(this.lon, this.zoom) - width / 2;
    const originY = latToWorldY(this.lat, this.zoom) - height / 2;

    const firstX = Math.floor(originX / TILE_SIZE);
    const lastX = Math.floor((originX + width) / TILE_SIZE);
    const firstY = Math.max(0, Math.floor(originY / TILE_SIZE));
    const lastY = Math.min(
      2 ** this.zoom - 1,
      Math.floor((originY + height) / TILE_SIZE),
    );

    for (let ty = firstY; ty <= lastY; ty++) {
      for (let tx = firstX; tx <= lastX; tx++) {
        const wrapped = ((tx % 2 ** this.zoom) + 2 ** this.zoom) % 2 ** this.zoom;
        const img = document.createElement("img");
        img.className = "tile";
        img.alt = "";
        img.style.left = `${tx * TILE_SIZE - originX}px`;
        img.style.top = `${ty * TILE_SIZE - originY}px`;
        img.addEventListener("error", () => this.onTileError());
        img.src = tileUrl(this.options.tileUrlTemplate, this.zoom, wrapped, ty);
        this.tiles.appendChild(img);
      }
    }

    const pinAt = this.pinPosition();
    if (pinAt === null) {
      this.pin.hidden = true;
    } else {
      this.pin.hidden = false;
      this.pin.style.left = `${pinAt.left}px`;
      this.pin.style.top = `${pinAt.top}px`;
    }
  }

  private onTileError(): void {
    if (this.degraded) return;
    this.degraded = true;
    this.renderFallback();
  }

  private renderFallback(): void {
    this.tiles.hidden = true;
    this.pin.hidden = true;
    const lat = this.pinLat ?? this.lat;
    const lon = this.pinLon ?? this.lon;
    this.fallback.textContent = `${this.options.fallbackText} ${lat.toFixed(5)}, ${lon.toFixed(5)}`;
    this.fallback.hidden = false;
  }

  private size(): { width: number; height: number } {
    const width = this.root.clientWidth;
    const height = this.root.clientHeight;
    if (width > 0 && height > 0) return { width, height };
    return this.options.fallbackSize ?? { width: 640, height: 320 };
  }

  private bindGestures(): void {
    this.root.addEventListener("pointerdown", (event) => {
      this.root.setPointerCapture?.(event.pointerId ?? 0);
      this.pointers.set(event.pointerId ?? 0, {
        x: event.clientX,
        y: event.clientY,
      });
      if (this.pointers.size === 2) {
        this.pinchStart = {
          distance: this.pointerDistance(),
          zoom: this.zoom,
        };
      }
    });

    this.root.addEventListener("pointermove", (event) => {
      const id = event.pointerId ?? 0;
      const previous = this.pointers.get(id);
      if (previous === undefined) return;
      const current = { x: event.clientX, y: event.clientY };
      this.pointers.set(id, current);

      if (this.pointers.size === 1) {
        this.panBy(current.x - previous.x, current.y - previous.y);
      } else if (this.pointers.size === 2 && this.pinchStart !== null) {
        const distance = this.pointerDistance();
        if (distance > 0 && this.pinchStart.distance > 0) {
          const target = Math.round(
            this.pinchStart.zoom +
              Math.log2(distance / this.pinchStart.distance),
          );
          this.setZoom(target);
        }
      }
    });

    const release = (event: PointerEvent) => {
      this.pointers.delete(event.pointerId ?? 0);
      if (this.pointers.size < 2) this.pinchStart = null;
    };
    this.root.addEventListener("pointerup", release);
    this.root.addEventListener("pointercancel", release);

    this.root.addEventListener("wheel", (event) => {
      event.preventDefault();
      if (event.deltaY < 0) this.zoomIn();
      else if (event.deltaY > 0) this.zoomOut();
    });
  }

  private pointerDistance(): number {
    const [a, b] = [...this.pointers.values()];
    if (a === undefined || b === undefined) return 0;
    return Math.hypot(a.x - b.x, a.y - b.y);
  }
}

function clampZoom(zoom: number): number {
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, zoom));
}
