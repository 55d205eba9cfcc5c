// Top-down canvas map: crossing stripes, walked trail, agent arrow.
// Purely cosmetic; hidden entirely in blindfold mode.

import type { Layout, StateMsg } from './protocol.js'

const SCALE = 46 // px per metre

export function drawMap(
  canvas: HTMLCanvasElement,
  layout: Layout,
  state: StateMsg | null,
  trail: Array<[number, number]>,
): void {
  const ctx = canvas.getContext('2d')
  if (!ctx) return
  const w = canvas.width
  const h = canvas.height
  ctx.fillStyle = '#2b2b31'
  ctx.fillRect(0, 0, w, h)

  const span = layout.stripe_count * layout.stripe_width
  const cx = layout.origin[0] + (span / 2) * Math.cos(layout.orientation)
  const cy = layout.origin[1] + (span / 2) * Math.sin(layout.orientation)

  const toScreen = (x: number, y: number): [number, number] =>
    [w / 2 + (x - cx) * SCALE, h / 2 - (y - cy) * SCALE]

  // stripes: light paint on dark asphalt
  const ux = Math.cos(layout.orientation)
  const uy = Math.sin(layout.orientation)
  const lx = -uy
  const ly = ux
  const half = layout.stripe_length / 2
  for (let k = 0; k < layout.stripe_count; k++) {
    const near = k * layout.stripe_width
    const far = near + layout.stripe_width
    const corners: Array<[number, number]> = [
      [layout.origin[0] + near * ux + half * lx, layout.origin[1] + near * uy + half * ly],
      [layout.origin[0] + far * ux + half * lx, layout.origin[1] + far * uy + half * ly],
      [layout.origin[0] + far * ux - half * lx, layout.origin[1] + far * uy - half * ly],
      [layout.origin[0] + near * ux - half * lx, layout.origin[1] + near * uy - half * ly],
    ]
    ctx.beginPath()
    corners.forEach(([x, y], i) => {
      const [sx, sy] = toScreen(x, y)
      if (i === 0) ctx.moveTo(sx, sy)
      else ctx.lineTo(sx, sy)
    })
    ctx.closePath()
    ctx.fillStyle = k % 2 === 0 ? '#e8e6df' : '#c9c7c0'
    ctx.fill()
  }

  // walked trail
  if (trail.length > 1) {
    ctx.beginPath()
    trail.forEach(([x, y], i) => {
      const [sx, sy] = toScreen(x, y)
      if (i === 0) ctx.moveTo(sx, sy)
      else ctx.lineTo(sx, sy)
    })
    ctx.strokeStyle = 'rgba(120, 200, 255, 0.55)'
    ctx.lineWidth = 2
    ctx.stroke()
  }

  // agent arrow
  if (state) {
    const [ax, ay] = toScreen(state.x, state.y)
    const a = -state.heading // canvas y grows downward
    ctx.save()
    ctx.translate(ax, ay)
    ctx.rotate(a)
    ctx.beginPath()
    ctx.moveTo(14, 0)
    ctx.lineTo(-8, 8)
    ctx.lineTo(-4, 0)
    ctx.lineTo(-8, -8)
    ctx.closePath()
    ctx.fillStyle = state.aligned ? '#7fd77f' : '#ffb454'
    ctx.fill()
    ctx.restore()
  }
}

export function drawBlindfold(canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext('2d')
  if (!ctx) return
  ctx.fillStyle = '#151518'
  ctx.fillRect(0, 0, canvas.width, canvas.height)
  ctx.fillStyle = '#5b5b66'
  ctx.font = '16px system-ui, sans-serif'
  ctx.textAlign = 'center'
  ctx.fillText('blindfold on - steer by sound (B to peek)', canvas.width / 2, canvas.height / 2)
}
