// Session view model: pure state, no DOM, no audio. The UI renders from
// this; audio is deliberately not routed through it, so no view state
// (blindfold included) can ever mute or alter playback.

import type {
  HelloMsg,
  InstructionMsg,
  MetricsMsg,
  ServerMessage,
  StateMsg,
} from './protocol.js'

export type Connection = 'idle' | 'connecting' | 'connected' | 'disconnected'

export interface FeedItem {
  time: number
  kind: 'instruction' | 'speech' | 'status'
  text: string
}

export interface HandleResult {
  speak?: string
}

const FEED_LIMIT = 200

export class SessionViewModel {
  connection: Connection = 'idle'
  hello: HelloMsg | null = null
  state: StateMsg | null = null
  instruction: InstructionMsg | null = null
  metrics: MetricsMsg | null = null
  blindfold = false
  feed: FeedItem[] = []
  trail: Array<[number, number]> = []

  get showMap(): boolean {
    // blindfold hides the map and pose overlay; nothing else changes
    return this.hello !== null && !this.blindfold
  }

  get finished(): boolean {
    return this.metrics !== null
  }

  toggleBlindfold(): void {
    this.blindfold = !this.blindfold
    this.pushFeed(this.state?.time ?? 0, 'status',
      this.blindfold ? 'blindfold on' : 'blindfold off')
  }

  connecting(): void {
    this.connection = 'connecting'
  }

  connected(): void {
    this.connection = 'connected'
  }

  disconnected(): void {
    // keep whatever arrived (metrics-so-far stays on screen)
    this.connection = 'disconnected'
    this.pushFeed(this.state?.time ?? 0, 'status', 'disconnected')
  }

  handle(msg: ServerMessage): HandleResult {
    switch (msg.type) {
      case 'hello':
        this.hello = msg
        this.pushFeed(0, 'status', `session started (${msg.mode} mode)`)
        return {}
      case 'state':
        this.state = msg
        this.trail.push([msg.x, msg.y])
        if (this.trail.length > 3000) this.trail.splice(0, this.trail.length - 3000)
        return {}
      case 'instruction':
        this.instruction = msg
        this.pushFeed(msg.time, 'instruction',
          `${msg.name} (${formatQuantity(msg)})`)
        return {}
      case 'speech':
        this.pushFeed(msg.time, 'speech', msg.text)
        return { speak: msg.text }
      case 'metrics':
        this.metrics = msg
        this.pushFeed(msg.duration_s, 'status',
          msg.completed ? 'crossing complete' : msg.aborted ? 'session aborted' : 'timed out')
        return {}
    }
  }

  private pushFeed(time: number, kind: FeedItem['kind'], text: string): void {
    this.feed.push({ time, kind, text })
    if (this.feed.length > FEED_LIMIT) this.feed.splice(0, this.feed.length - FEED_LIMIT)
  }
}

export function formatQuantity(msg: InstructionMsg): string {
  switch (msg.name) {
    case 'rotate-left':
    case 'rotate-right':
    case 'raise':
    case 'lower':
      return `${(msg.quantity * 180 / Math.PI).toFixed(0)} deg`
    case 'not-found':
      return 'searching'
    case 'cross':
      return `${msg.quantity.toFixed(1)} m left, bias ${msg.lateral_bias.toFixed(2)}`
    default:
      return `${msg.quantity.toFixed(1)} m`
  }
}

export interface MetricsRow {
  label: string
  value: string
}

export function metricsRows(m: MetricsMsg): MetricsRow[] {
  const fmt = (v: number | null) => (v === null ? 'n/a' : `${v.toFixed(2)} s`)
  return [
    { label: 'mode', value: m.mode },
    { label: 'completed', value: m.completed ? 'yes' : m.aborted ? 'aborted' : 'timed out' },
    { label: 'time to align', value: fmt(m.time_to_align_s) },
    { label: 'time to cross', value: fmt(m.time_to_cross_s) },
    { label: 'messages', value: String(m.message_count) },
    { label: 'taps', value: String(m.tap_count) },
    { label: 'duration', value: `${m.duration_s.toFixed(2)} s` },
  ]
}
